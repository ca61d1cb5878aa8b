//! File formats, parallel Monte Carlo drivers, self-checks and the `iou`
//! command line on top of [`iou_core`].

pub mod cli;
pub mod formats;
pub mod mc;
pub mod verify;
