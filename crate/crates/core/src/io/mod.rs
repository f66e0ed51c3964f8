//! File formats: PFM float planes and 8/16-bit grayscale PNG.

mod pfm;
mod png;

pub use pfm::{read_pfm_gray, read_pfm_normals, write_pfm_gray, write_pfm_normals};
pub use png::{read_gray_png, read_mask_png, write_gray16_png, write_mask_png, write_normal_rgb_png};
