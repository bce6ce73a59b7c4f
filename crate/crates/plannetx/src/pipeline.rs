//! Desk-scale end-to-end orchestration (placeholder).
