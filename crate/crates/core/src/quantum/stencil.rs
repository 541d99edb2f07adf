//! Central finite-difference stencils for `∂` and `∂²` on a uniform grid.

use crate::registry::Registry;

pub trait Stencil: Send + Sync {
    fn name(&self) -> &'static str;

    /// Accuracy order in the spacing.
    fn order(&self) -> u32;

    /// Weights at offsets `-w..=w` for `∂²`, to be divided by `Δx²`.
    fn second(&self) -> &[f64];

    /// Weights at offsets `-w..=w` for `∂`, to be divided by `Δx`.
    /// Antisymmetric about the centre.
    fn first(&self) -> &[f64];

    fn half_width(&self) -> usize {
        self.second().len() / 2
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Central2;

impl Stencil for Central2 {
    fn name(&self) -> &'static str {
        "central2"
    }

    fn order(&self) -> u32 {
        2
    }

    fn second(&self) -> &[f64] {
        &[1.0, -2.0, 1.0]
    }

    fn first(&self) -> &[f64] {
        &[-0.5, 0.0, 0.5]
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Central4;

impl Stencil for Central4 {
    fn name(&self) -> &'static str {
        "central4"
    }

    fn order(&self) -> u32 {
        4
    }

    fn second(&self) -> &[f64] {
        &[-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]
    }

    fn first(&self) -> &[f64] {
        &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0]
    }
}

/// Built-in stencils; `central4` is the default.
pub fn stencils() -> Registry<dyn Stencil> {
    let mut r: Registry<dyn Stencil> = Registry::new("stencil");
    r.register("central4", || Box::new(Central4));
    r.register("central2", || Box::new(Central2));
    r
}
