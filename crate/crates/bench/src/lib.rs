//! Placeholder library target; the measurements live in `benches/`.
