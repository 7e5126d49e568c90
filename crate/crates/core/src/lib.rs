pub mod augment;
pub mod dicom;
pub mod image;
pub mod inference;
mod interp;
pub mod manifest;
pub mod metrics;
pub mod ood;
pub mod pipeline;
pub mod synthetic;
