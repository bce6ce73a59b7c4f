fn main() {
    println!("plannetx");
}
