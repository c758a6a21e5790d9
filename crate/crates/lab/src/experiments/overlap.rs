//! Overlaps `|(g e_i | u^0(sigma, t) f^t)|` of a reflected packet with a compact profile.

use hawking_core::classical::ReflectedPacket;
use hawking_core::numerics::HermitianEigen;
use hawking_core::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::hawking1::LeftPacket;
use super::{boundary, bump, check_ladder, ensure, par_rungs, strictly_decreasing};
use crate::report::{Assertion, Report, Table};
use crate::LabError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OverlapConfig {
    pub kappa: f64,
    pub sigma: f64,
    pub carrier: f64,
    pub margin: f64,
    pub cut: f64,
    pub t_ladder: Vec<f64>,
    pub sigma_step: f64,
    /// Interaction profile `g`: a smooth bump.
    pub g_center: f64,
    pub g_radius: f64,
    /// Real symmetric 2x2 matrix whose eigenvectors are the `e_i`.
    pub m: [[f64; 2]; 2],
    pub samples: usize,
    pub zero_tol: f64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig {
            kappa: 1.0,
            sigma: 0.5,
            carrier: 1.0,
            margin: 0.5,
            cut: 6.0,
            t_ladder: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            sigma_step: 0.5,
            g_center: 0.7,
            g_radius: 0.5,
            m: [[1.0, 0.5], [0.5, -0.5]],
            samples: 4000,
            zero_tol: 1e-12,
        }
    }
}

impl OverlapConfig {
    fn validate(&self) -> Result<(), LabError> {
        check_ladder("t_ladder", &self.t_ladder)?;
        ensure(self.sigma > 0.0 && self.margin > 0.0 && self.cut > 0.0, "sigma, margin and cut must be positive")?;
        ensure(self.sigma_step > 0.0 && self.g_radius > 0.0, "sigma_step and g_radius must be positive")?;
        ensure(self.g_center - self.g_radius > 0.0, "the profile must be supported in x > 0")?;
        ensure(self.m[0][1] == self.m[1][0], "m must be symmetric")?;
        ensure(self.samples >= 64, "samples must be at least 64")
    }
}

pub fn run(cfg: &OverlapConfig) -> Result<Report, LabError> {
    cfg.validate()?;
    let b = boundary(cfg.kappa)?;
    let packet = LeftPacket::new(b.x_star(), cfg.margin, cfg.sigma, cfg.carrier, cfg.cut);
    let m = DMatrix::from_fn(2, 2, |i, j| C64::new(cfg.m[i][j], 0.0));
    let e = HermitianEigen::new(&m).vectors;
    let g = bump(cfg.g_center, cfg.g_radius);
    let g_lo = cfg.g_center - cfg.g_radius;
    let r = packet.c;

    let per_t = par_rungs(&cfg.t_ladder, |t| {
        let p = ReflectedPacket::new(&b, &*packet.profile, (packet.a, packet.c), t, cfg.samples)?;
        let steps = (t / cfg.sigma_step).floor() as usize;
        let mut rows = Vec::new();
        for k in 0..=steps {
            let sigma = k as f64 * cfg.sigma_step;
            let mut best: f64 = 0.0;
            for i in 0..2 {
                let gi = |x: f64| [e[(0, i)] * g(x), e[(1, i)] * g(x)];
                best = best.max(p.overlap_at(sigma, &gi).norm());
            }
            rows.push([t, sigma, best, r - sigma, p.right_edge_at(sigma)]);
        }
        Ok(rows)
    })?;

    let mut table = Table::new(&["t", "sigma", "overlap", "support_bound", "right_edge"]);
    let mut cleared = Vec::new();
    let mut edge_cleared = Vec::new();
    let mut at_zero = Vec::new();
    for rows in &per_t {
        for row in rows {
            table.push(row.to_vec());
            if row[3] < g_lo {
                cleared.push(row[2]);
            }
            if row[4] < g_lo {
                edge_cleared.push(row[2]);
            }
            if row[1] == 0.0 {
                at_zero.push(row[2]);
            }
        }
    }
    let max_of = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let mut report = Report::new("overlap-scan", table);
    report.set("profile_support", vec![g_lo, cfg.g_center + cfg.g_radius]);
    report.set("data_right_end", r);
    report.set("rows_beyond_support", cleared.len());
    report.check(Assertion::at_most(
        "zero_beyond_support",
        max_of(&cleared),
        cfg.zero_tol,
        "overlap where R - sigma < inf supp g",
    ));
    report.check(Assertion::at_most(
        "zero_beyond_packet_edge",
        max_of(&edge_cleared),
        cfg.zero_tol,
        "overlap where the occupied region ends left of supp g",
    ));
    report.check(Assertion::holds("decay_at_sigma_zero", strictly_decreasing(&at_zero), "overlap at sigma = 0 along t"));
    report.add_series("sigma_zero", cfg.t_ladder.iter().cloned().zip(at_zero).collect());
    Ok(report)
}
