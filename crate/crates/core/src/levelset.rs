//! Distance-regularized level-set evolution used to grow cytoplasm contours
//! outward from detected nuclei.
//!
//! The field evolves under three forces: a double-well distance regularizer
//! that keeps `|grad phi|` near one close to the contour, an edge term that
//! attracts the zero level set to minima of the edge indicator, and a balloon
//! term that inflates (negative weight) or deflates the contour. One explicit
//! Euler step is exposed so callers can audit intermediate fields; the
//! stability bound `mu * dt < 0.25` is enforced on entry.

use crate::error::{Error, Result};
use crate::filter::gaussian_blur_field;
use crate::raster::{BinaryMask, FloatField, GrayImage};
use serde::Serialize;

/// Implicit contour representation; the zero level set is the contour and
/// negative values lie inside.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    width: usize,
    height: usize,
    phi: Vec<f64>,
}

impl LevelSetField {
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut phi = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                phi.push(f(x, y));
            }
        }
        LevelSetField { width, height, phi }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.phi[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.phi[y * self.width + x] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().all(|v| v.is_finite())
    }

    /// Pixel count of the region enclosed by the zero level set.
    pub fn interior_area(&self) -> usize {
        self.phi.iter().filter(|&&v| v < 0.0).count()
    }

    /// Mask of the enclosed region.
    pub fn interior_mask(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.get(x, y) < 0.0)
    }
}

/// Evolution weights and schedule.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DrlseParams {
    /// Distance-regularization weight; `mu * dt` must stay below 0.25.
    pub mu: f64,
    /// Edge-attraction weight.
    pub lambda: f64,
    /// Balloon weight; negative values inflate the contour.
    pub balloon_alpha: f64,
    /// Width of the smoothed Dirac/Heaviside pair, in pixels.
    pub epsilon: f64,
    /// Explicit Euler time step.
    pub dt: f64,
    /// Number of evolution steps.
    pub iterations: usize,
    /// Magnitude of the binary-step initialization.
    pub c0: f64,
    /// Gaussian pre-smoothing of the edge indicator input.
    pub sigma: f64,
}

impl Default for DrlseParams {
    fn default() -> Self {
        DrlseParams {
            mu: 0.2,
            lambda: 5.0,
            balloon_alpha: -3.0,
            epsilon: 1.5,
            dt: 1.0,
            iterations: 300,
            c0: 2.0,
            sigma: 1.5,
        }
    }
}

impl DrlseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu * self.dt < 0.25) {
            return Err(Error::InvalidParameter(format!(
                "mu * dt must stay below 0.25 for stability, got {}",
                self.mu * self.dt
            )));
        }
        if self.epsilon <= 0.0 || self.dt <= 0.0 || self.c0 <= 0.0 || self.sigma <= 0.0 {
            return Err(Error::InvalidParameter(
                "epsilon, dt, c0 and sigma must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Edge indicator `g = 1 / (1 + |grad(G_sigma * I)|^2)`, central differences
/// on the Gaussian-smoothed image. Values lie in (0, 1] and dip toward zero
/// at strong edges.
pub fn edge_indicator(img: &GrayImage, sigma: f64) -> Result<FloatField> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "smoothing sigma must be positive, got {sigma}"
        )));
    }
    let (w, h) = img.dimensions();
    let raw = FloatField::from_fn(w, h, |x, y| img.get(x, y) as f64);
    let smooth = gaussian_blur_field(&raw, sigma);
    let mut g = FloatField::new(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (smooth.get_clamped(x + 1, y) - smooth.get_clamped(x - 1, y)) / 2.0;
            let gy = (smooth.get_clamped(x, y + 1) - smooth.get_clamped(x, y - 1)) / 2.0;
            g.set(x as usize, y as usize, 1.0 / (1.0 + gx * gx + gy * gy));
        }
    }
    Ok(g)
}

/// Binary-step initialization: `-c0` inside the disc, `+c0` outside. The
/// regularizer repairs the field toward a signed distance during evolution.
pub fn init_phi_disc(
    width: usize,
    height: usize,
    center: (usize, usize),
    radius: f64,
    c0: f64,
) -> Result<LevelSetField> {
    if center.0 >= width || center.1 >= height {
        return Err(Error::InvalidParameter(format!(
            "disc center {:?} outside {}x{} grid",
            center, width, height
        )));
    }
    if radius <= 0.0 || c0 <= 0.0 {
        return Err(Error::InvalidParameter("disc radius and c0 must be positive".into()));
    }
    let r2 = radius * radius;
    Ok(LevelSetField::from_fn(width, height, |x, y| {
        let dx = x as f64 - center.0 as f64;
        let dy = y as f64 - center.1 as f64;
        if dx * dx + dy * dy <= r2 {
            -c0
        } else {
            c0
        }
    }))
}

/// Smoothed Dirac of width `eps`.
#[inline]
fn dirac(x: f64, eps: f64) -> f64 {
    if x.abs() <= eps {
        (1.0 + (std::f64::consts::PI * x / eps).cos()) / (2.0 * eps)
    } else {
        0.0
    }
}

/// `p'(s)/s` for the double-well potential with minima at 0 and 1.
#[inline]
fn well_derivative_ratio(s: f64) -> f64 {
    use std::f64::consts::PI;
    if s <= 1.0 {
        if s < 1e-10 {
            1.0
        } else {
            (2.0 * PI * s).sin() / (2.0 * PI * s)
        }
    } else {
        (s - 1.0) / s
    }
}

/// Replicate Li-style Neumann boundary values (border copied from two rows
/// or columns inside) so central differences see a zero normal derivative.
fn neumann(phi: &LevelSetField) -> LevelSetField {
    let (w, h) = phi.dimensions();
    if w < 3 || h < 3 {
        return phi.clone();
    }
    let mut out = phi.clone();
    for x in 0..w {
        out.set(x, 0, phi.get(x, 2));
        out.set(x, h - 1, phi.get(x, h - 3));
    }
    for y in 0..h {
        out.set(0, y, out.get(2, y));
        out.set(w - 1, y, out.get(w - 3, y));
    }
    out
}

#[inline]
fn dx_central(f: &FloatField, x: isize, y: isize) -> f64 {
    (f.get_clamped(x + 1, y) - f.get_clamped(x - 1, y)) / 2.0
}

#[inline]
fn dy_central(f: &FloatField, x: isize, y: isize) -> f64 {
    (f.get_clamped(x, y + 1) - f.get_clamped(x, y - 1)) / 2.0
}

const GRAD_EPS: f64 = 1e-10;

/// One explicit Euler update of the evolution equation. Standalone calls
/// report numerical failures as step 0; `drlse_evolve` rewrites the index.
pub fn drlse_step(phi: &LevelSetField, g: &FloatField, params: &DrlseParams) -> Result<LevelSetField> {
    params.validate()?;
    if phi.dimensions() != g.dimensions() {
        return Err(Error::InvalidInput("phi and g differ in size".into()));
    }
    let next = step_unchecked(phi, g, params);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NumericalInstability { step: 0 })
    }
}

fn step_unchecked(phi: &LevelSetField, g: &FloatField, params: &DrlseParams) -> LevelSetField {
    let (w, h) = phi.dimensions();
    let bounded = neumann(phi);
    let f = FloatField::from_fn(w, h, |x, y| bounded.get(x, y));

    let mut nx = FloatField::new(w, h);
    let mut ny = FloatField::new(w, h);
    let mut wx = FloatField::new(w, h);
    let mut wy = FloatField::new(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let px = dx_central(&f, x, y);
            let py = dy_central(&f, x, y);
            let s = (px * px + py * py).sqrt();
            nx.set(x as usize, y as usize, px / (s + GRAD_EPS));
            ny.set(x as usize, y as usize, py / (s + GRAD_EPS));
            // (d_p(s) - 1) * grad phi, the non-Laplacian part of the
            // regularizer flow.
            let dps = well_derivative_ratio(s);
            wx.set(x as usize, y as usize, (dps - 1.0) * px);
            wy.set(x as usize, y as usize, (dps - 1.0) * py);
        }
    }

    let mut out = LevelSetField::from_fn(w, h, |x, y| bounded.get(x, y));
    for y in 0..h as isize {
        for x in 0..w as isize {
            let curvature = dx_central(&nx, x, y) + dy_central(&ny, x, y);
            let lap = f.get_clamped(x + 1, y)
                + f.get_clamped(x - 1, y)
                + f.get_clamped(x, y + 1)
                + f.get_clamped(x, y - 1)
                - 4.0 * f.get_clamped(x, y);
            let reg = dx_central(&wx, x, y) + dy_central(&wy, x, y) + lap;

            let gv = g.get(x as usize, y as usize);
            let gx = dx_central(g, x, y);
            let gy = dy_central(g, x, y);
            let d = dirac(f.get_clamped(x, y), params.epsilon);
            let edge = d
                * (gx * nx.get(x as usize, y as usize)
                    + gy * ny.get(x as usize, y as usize)
                    + gv * curvature);
            let balloon = params.balloon_alpha * gv * d;

            let v = f.get_clamped(x, y)
                + params.dt * (params.mu * reg + params.lambda * edge + balloon);
            out.set(x as usize, y as usize, v);
        }
    }
    out
}

/// Run `iterations` steps confined to `domain`: after every step the field is
/// clamped to `+c0` outside the domain, and the returned mask is the interior
/// of the zero level set intersected with the domain.
pub fn drlse_evolve(
    phi0: &LevelSetField,
    g: &FloatField,
    params: &DrlseParams,
    domain: &BinaryMask,
) -> Result<BinaryMask> {
    params.validate()?;
    if phi0.dimensions() != g.dimensions() || phi0.dimensions() != domain.dimensions() {
        return Err(Error::InvalidInput("phi, g and domain differ in size".into()));
    }
    if domain.is_empty() {
        return Err(Error::InvalidInput("evolution domain is empty".into()));
    }

    let clamp = |field: &mut LevelSetField| {
        for (i, &inside) in domain.as_slice().iter().enumerate() {
            if !inside {
                field.phi[i] = params.c0;
            }
        }
    };

    let mut phi = phi0.clone();
    clamp(&mut phi);
    for step in 0..params.iterations {
        phi = step_unchecked(&phi, g, params);
        if !phi.is_finite() {
            return Err(Error::NumericalInstability { step });
        }
        clamp(&mut phi);
    }
    Ok(phi.interior_mask().and(domain))
}
