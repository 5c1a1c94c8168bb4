//! Named example metrics, so tests and the CLI need no fixture files.
//!
//! | name                    | model             | gbar                              | kappa_inf     |
//! |-------------------------|-------------------|-----------------------------------|---------------|
//! | `hyperbolic-disk`       | unit ball         | `4 dy^2`, bdf `1 - |y|^2`         | `-1`          |
//! | `scaled-disk(a)`        | unit ball         | `a^2 dy^2`, bdf `1 - |y|^2`       | `-4 / a^2`    |
//! | `normal-form-constK(c)` | `[0,1] x S^1`     | `dr^2 / c^2 + (1 + r)^2 dy^2`     | `-c^2`        |
//! | `borderline`            | `[0,1] x S^1`     | `4 dr^2 / (3 + cos y) + dy^2`     | `-(3+cos y)/4`|
//!
//! `borderline` attains `kappa_inf = -1` at `y = 0` only.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::manifold::{BoundaryEnds, ModelManifold};
use crate::math;
use crate::metric::MetricSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    HyperbolicDisk,
    ScaledDisk(f64),
    NormalFormConstK(f64),
    Borderline,
}

impl Builtin {
    /// Parses `hyperbolic-disk`, `scaled-disk(a)`, `normal-form-constK(c)` or
    /// `borderline`.
    pub fn from_name(name: &str) -> Result<Builtin> {
        let name = name.trim();
        let arg = |prefix: &str| -> Option<Result<f64>> {
            let rest = name.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(rest.trim().parse::<f64>().map_err(|_| Error::InvalidParameter("builtin argument is not a number")))
        };
        if name == "hyperbolic-disk" {
            return Ok(Builtin::HyperbolicDisk);
        }
        if name == "borderline" {
            return Ok(Builtin::Borderline);
        }
        if let Some(a) = arg("scaled-disk") {
            return Ok(Builtin::ScaledDisk(a?));
        }
        if let Some(c) = arg("normal-form-constK") {
            return Ok(Builtin::NormalFormConstK(c?));
        }
        Err(Error::InvalidParameter("unknown builtin metric"))
    }

    pub fn name(&self) -> String {
        match self {
            Builtin::HyperbolicDisk => "hyperbolic-disk".into(),
            Builtin::ScaledDisk(a) => format!("scaled-disk({a})"),
            Builtin::NormalFormConstK(c) => format!("normal-form-constK({c})"),
            Builtin::Borderline => "borderline".into(),
        }
    }

    /// Builds the metric; `dim` only affects the disk models.
    pub fn spec(&self, dim: usize) -> Result<MetricSpec> {
        match *self {
            Builtin::HyperbolicDisk => hyperbolic_disk(dim),
            Builtin::ScaledDisk(a) => scaled_disk(dim, a),
            Builtin::NormalFormConstK(c) => normal_form_const_k(c),
            Builtin::Borderline => borderline(),
        }
    }
}

fn disk_spec(dim: usize, diagonal: f64) -> Result<MetricSpec> {
    let disk = ModelManifold::disk(dim)?;
    let names = disk.coordinate_names();
    let entry = format!("{diagonal}");
    let rows: Vec<Vec<&str>> = (0..dim).map(|i| (0..dim).map(|j| if i == j { entry.as_str() } else { "0" }).collect()).collect();
    let rows_ref: Vec<&[&str]> = rows.iter().map(|r| r.as_slice()).collect();
    let mut bdf = String::from("1");
    for n in names {
        bdf.push_str(" - ");
        bdf.push_str(n);
        bdf.push_str("^2");
    }
    MetricSpec::from_sources(disk, &rows_ref, &bdf)
}

pub fn hyperbolic_disk(dim: usize) -> Result<MetricSpec> {
    disk_spec(dim, 4.0)
}

/// `gbar = a^2 delta`: constant curvature `-4 / a^2`.
pub fn scaled_disk(dim: usize, a: f64) -> Result<MetricSpec> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter("scaled-disk needs a > 0"));
    }
    disk_spec(dim, a * a)
}

/// Warped product already in collar normal form with `K^2 = c^2`.
pub fn normal_form_const_k(c: f64) -> Result<MetricSpec> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("normal-form-constK needs c > 0"));
    }
    let torus = ModelManifold::collar_torus(2, 1.0, &[math::TAU], BoundaryEnds::Inner)?;
    let rr = format!("{}", 1.0 / (c * c));
    MetricSpec::from_sources(torus, &[&[rr.as_str(), "0"], &["0", "(1 + r)^2"]], "r")
}

pub fn borderline() -> Result<MetricSpec> {
    let torus = ModelManifold::collar_torus(2, 1.0, &[math::TAU], BoundaryEnds::Inner)?;
    MetricSpec::from_sources(torus, &[&["4/(3 + cos(y1))", "0"], &["0", "1"]], "r")
}

/// Every builtin with its default parameters (`scaled-disk(4)`,
/// `normal-form-constK(0.5)`).
pub fn all(dim: usize) -> Vec<MetricSpec> {
    vec![
        hyperbolic_disk(dim).expect("builtin"),
        scaled_disk(dim, 4.0).expect("builtin"),
        normal_form_const_k(0.5).expect("builtin"),
        borderline().expect("builtin"),
    ]
}

pub fn default_builtins() -> Vec<Builtin> {
    vec![Builtin::HyperbolicDisk, Builtin::ScaledDisk(4.0), Builtin::NormalFormConstK(0.5), Builtin::Borderline]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for b in default_builtins() {
            assert_eq!(Builtin::from_name(&b.name()).unwrap(), b);
        }
        assert_eq!(Builtin::from_name("scaled-disk( 2.5 )").unwrap(), Builtin::ScaledDisk(2.5));
        assert!(Builtin::from_name("scaled-disk(x)").is_err());
        assert!(Builtin::from_name("sphere").is_err());
    }
}
