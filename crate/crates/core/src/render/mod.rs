//! Color-basis decoding, cameras and volume rendering.

mod camera;
mod decoder;
mod image;
mod volume;

pub use camera::{focal_from_fov, generate_rays, look_at, Background, Camera, Ray, IDENTITY_POSE};
pub use decoder::{sigmoid, softplus, BasisActivations, ColorBasisDecoder, Decoded};
pub use image::{ray_rng, render_image, trace_ray, RenderOptions, RenderedImage};
pub use volume::{composite, composite_backward, render_ray, stratified_samples, Composite, RaySamples, Stratified};
