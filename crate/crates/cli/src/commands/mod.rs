pub mod calibrate;
pub mod diagnose;
pub mod fit;
pub mod simulate;
pub mod tail;
