//! Fits an inverse temperature to reflected occupations across carrier frequencies.
//!
//! Each packet has its own spectral density, so the model occupation is the Fermi factor
//! folded with that density rather than a bare `(1 + e^{beta w})^{-1}` at the carrier.

use hawking_core::classical::ReflectedPacket;
use hawking_core::spectral::{fermi, spectral_density};
use serde::{Deserialize, Serialize};

use super::hawking1::LeftPacket;
use super::{boundary, ensure, strictly_decreasing};
use crate::report::{Assertion, Report, Table};
use crate::LabError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TemperatureConfig {
    pub kappas: Vec<f64>,
    /// Carriers are `factor * kappa`.
    pub carrier_factors: Vec<f64>,
    /// Packet width `sigma_factor / kappa`.
    pub sigma_factor: f64,
    /// Evaluation time `t_factor / kappa`.
    pub t_factor: f64,
    pub margin: f64,
    pub cut: f64,
    pub samples: usize,
    pub oracle_h_factor: f64,
    /// Allowed relative deviation of the fitted beta from `2 pi / kappa`.
    pub rel_tol: f64,
    /// Fit residual (rms, in occupation units) above which no beta assertion is made.
    pub max_residual: f64,
}

impl Default for TemperatureConfig {
    fn default() -> Self {
        TemperatureConfig {
            kappas: vec![0.5, 1.0, 2.0],
            carrier_factors: vec![-0.6, -0.3, 0.0, 0.3, 0.6],
            sigma_factor: 2.0,
            t_factor: 16.0,
            margin: 0.5,
            cut: 8.0,
            samples: 4000,
            oracle_h_factor: 2e-3,
            rel_tol: 0.05,
            max_residual: 1e-3,
        }
    }
}

impl TemperatureConfig {
    fn validate(&self) -> Result<(), LabError> {
        ensure(!self.kappas.is_empty() && self.kappas.iter().all(|k| *k > 0.0), "kappas must be positive")?;
        ensure(self.carrier_factors.len() >= 2, "need at least two carriers")?;
        ensure(self.carrier_factors.windows(2).all(|w| w[1] > w[0]), "carrier_factors must increase")?;
        ensure(
            self.sigma_factor > 0.0 && self.t_factor > 0.0 && self.margin > 0.0 && self.cut > 0.0,
            "sigma_factor, t_factor, margin and cut must be positive",
        )?;
        ensure(self.samples >= 64 && self.oracle_h_factor > 0.0, "samples >= 64 and positive oracle_h_factor")
    }
}

/// Normalised spectral density of one packet: `(xi, weight)` with unit total.
struct Density {
    xi: Vec<f64>,
    w: Vec<f64>,
}

impl Density {
    fn occupation(&self, beta: f64) -> f64 {
        self.xi.iter().zip(&self.w).map(|(&x, &w)| w * fermi(beta, -x)).sum()
    }
}

fn density(packet: &LeftPacket, h: f64) -> Density {
    let (v, h) = packet.samples(h);
    let (ks, dens, dk) = spectral_density(&v, packet.a, h);
    let total: f64 = dens.iter().sum::<f64>() * dk;
    let keep: Vec<usize> = (0..ks.len()).filter(|&i| dens[i] * dk > 1e-18 * total).collect();
    Density { xi: keep.iter().map(|&i| ks[i]).collect(), w: keep.iter().map(|&i| dens[i] * dk / total).collect() }
}

/// Minimises `sum_j (q_j - c_j(beta))^2` over `ln beta` by a scan plus golden section.
fn fit_beta(obs: &[f64], dens: &[Density], beta_guess: f64) -> (f64, f64) {
    let cost = |lb: f64| {
        let beta = lb.exp();
        obs.iter().zip(dens).map(|(q, d)| (q - d.occupation(beta)).powi(2)).sum::<f64>()
    };
    let (lo, hi) = ((beta_guess / 20.0).ln(), (beta_guess * 20.0).ln());
    let n = 121;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let best = (0..n).min_by(|&a, &b| cost(grid[a]).total_cmp(&cost(grid[b]))).unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..200 {
        if cost(c) < cost(d) { b = d } else { a = c }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let lb = 0.5 * (a + b);
    (lb.exp(), (cost(lb) / obs.len() as f64).sqrt())
}

pub fn run(cfg: &TemperatureConfig) -> Result<Report, LabError> {
    cfg.validate()?;
    let mut table = Table::new(&["kappa", "carrier", "occupation", "oracle", "fitted"]);
    let mut fits = Table::new(&["kappa", "beta_fit", "beta_expected", "rel_deviation", "residual_rms"]);
    let mut report_checks = Vec::new();
    let mut betas = Vec::new();
    for &kappa in &cfg.kappas {
        let b = boundary(kappa)?;
        let beta0 = 2.0 * std::f64::consts::PI / kappa;
        let sigma = cfg.sigma_factor / kappa;
        let t = cfg.t_factor / kappa;
        let h = cfg.oracle_h_factor * sigma;
        let results: Vec<(f64, f64, Density)> = cfg
            .carrier_factors
            .iter()
            .map(|&cf| {
                let packet = LeftPacket::new(b.x_star(), cfg.margin, sigma, cf * kappa, cfg.cut);
                let p = ReflectedPacket::new(&b, &*packet.profile, (packet.a, packet.c), t, cfg.samples)?;
                let q = p.positive_projection() / packet.norm_sqr(h);
                Ok((cf * kappa, q, density(&packet, h)))
            })
            .collect::<Result<_, LabError>>()?;
        let obs: Vec<f64> = results.iter().map(|r| r.1).collect();
        let dens: Vec<Density> = results.into_iter().map(|r| r.2).collect();
        let (beta, resid) = fit_beta(&obs, &dens, beta0);
        for (i, d) in dens.iter().enumerate() {
            table.push(vec![kappa, cfg.carrier_factors[i] * kappa, obs[i], d.occupation(beta0), d.occupation(beta)]);
        }
        let dev = (beta - beta0).abs() / beta0;
        fits.push(vec![kappa, beta, beta0, dev, resid]);
        if resid <= cfg.max_residual {
            report_checks.push(Assertion::at_most(format!("beta_kappa_{kappa}"), dev, cfg.rel_tol, "fitted vs 2 pi / kappa"));
        } else {
            report_checks.push(Assertion::at_most(
                format!("fit_residual_kappa_{kappa}"),
                resid,
                cfg.max_residual,
                "fit residual too large for a beta assertion",
            ));
        }
        report_checks.push(Assertion::holds(
            format!("monotone_kappa_{kappa}"),
            strictly_decreasing(&obs),
            "occupation decreases with the carrier",
        ));
        betas.push((kappa, beta));
    }
    let mut report = Report::new("temperature-fit", table);
    for w in betas.windows(2) {
        let (k1, b1) = w[0];
        let (k2, b2) = w[1];
        let expected = k2 / k1;
        let dev = (b1 / b2 - expected).abs() / expected;
        report.check(Assertion::at_most(
            format!("scaling_{k1}_to_{k2}"),
            dev,
            cfg.rel_tol,
            "beta ratio vs inverse kappa ratio",
        ));
    }
    for a in report_checks {
        report.check(a);
    }
    report.set("oracle_provenance", "Fermi factor at beta = 2 pi / kappa folded with each packet's FFT spectral density");
    report.add_series("beta", betas.clone());
    report.add_table("fit", fits);
    Ok(report)
}
