// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance checks, run in-process by `spinscale verify` and by the
//! `acceptance` test target.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use spinscale_core::analysis::synthetic::{add_noise, linear_grid, log_grid, Noise};
use spinscale_core::analysis::*;
use spinscale_core::hamiltonians::{dipolar_secular, HamiltonianSpec};
use spinscale_core::protocols::*;
use spinscale_core::sequence::*;
use spinscale_core::spin::*;

use crate::config::ExperimentConfig;
use crate::run::{run, RunOptions};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    /// Wall-clock limit, seconds.
    pub budget: Option<f64>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let budget = self.budget.map(|b| format!(" of {b:.0} s")).unwrap_or_default();
        format!(
            "criterion {:>2} {} {}: {} [{:.2} s{}]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds,
            budget
        )
    }
}

type Check = Result<(bool, String), String>;

/// Runs `spinscale run` on a config with a given worker count.
pub type Runner<'a> = dyn Fn(&Path, &Path, usize) -> Result<(), String> + 'a;

pub const CRITERIA: [(u8, &str, Option<f64>); 10] = [
    (1, "average Hamiltonian", Some(10.0)),
    (2, "Magnus-order scaling", Some(60.0)),
    (3, "self-time collapse", Some(300.0)),
    (4, "perfect-reversal echo", None),
    (5, "MQC identities", Some(300.0)),
    (6, "two-spin analytics", None),
    (7, "golden-rule numbers", None),
    (8, "fit round-trips", Some(120.0)),
    (9, "sequence synthesis", None),
    (10, "determinism", None),
];

pub fn run_criterion(id: u8, runner: &Runner) -> Outcome {
    let (_, name, budget) = CRITERIA[(id - 1) as usize];
    let start = Instant::now();
    let result = match id {
        1 => average_hamiltonian(),
        2 => magnus_scaling(),
        3 => self_time_collapse_check(),
        4 => perfect_reversal(),
        5 => mqc_identities(),
        6 => two_spin(),
        7 => golden_rule(),
        8 => fit_round_trips(),
        9 => sequence_synthesis(),
        10 => determinism(runner),
        _ => Err(format!("unknown criterion {id}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(b) = budget {
        if seconds > b {
            passed = false;
            detail.push_str(&format!("; over the {b:.0} s budget"));
        }
    }
    Outcome { id, name, passed, detail, seconds, budget }
}

/// Every criterion, calling `report` as each one finishes.
pub fn run_all(runner: &Runner, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    (1..=10)
        .map(|id| {
            let o = run_criterion(id, runner);
            report(&o);
            o
        })
        .collect()
}

/// Runs the sweep in-process.
pub fn in_process_runner(config: &Path, out: &Path, workers: usize) -> Result<(), String> {
    let cfg = ExperimentConfig::load(config).map_err(|e| e.to_string())?;
    let opts = RunOptions { force: true, workers: Some(workers), seed: None };
    run(&cfg, out, &opts).map(|_| ()).map_err(|e| e.to_string())
}

fn err<E: ToString>(e: E) -> String {
    e.to_string()
}

fn cluster(n: usize, seed: u64, dbar: f64) -> Result<SpinSystem, String> {
    SpinSystem::random_cluster(n, 1.0, CouplingRule::DipolarAngular, seed).and_then(|s| s.normalized_to(dbar)).map_err(err)
}

fn with_offsets(s: SpinSystem, scale: f64) -> Result<SpinSystem, String> {
    let n = s.n_spins();
    s.with_zeeman_offsets((0..n).map(|i| scale * (1.0 + 0.37 * i as f64)).collect()).map_err(err)
}

fn average_hamiltonian() -> Check {
    let s = cluster(6, 21, 1e4)?;
    let hy = dipolar_secular(&s, Axis::Y).map_err(err)?;
    let mut worst_h: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for &delta in &[0.0, 0.1, 0.2, 0.3, 0.42] {
        for (dir, sign) in [(Direction::Forward, 1.0), (Direction::Backward, -1.0)] {
            let seq = build_sequence(&SequenceSpec::new(SequenceKind::P8, delta, 10e-6, dir)).map_err(err)?;
            let h0 = numeric_average_hamiltonian(&seq, &s, 0).map_err(err)?;
            worst_h = worst_h.max(h0.sub(&hy.scaled(sign * delta)).map_err(err)?.frobenius_norm() / hy.frobenius_norm());
            let avg = symbolic_average(&seq).map_err(err)?;
            let (a, b) = ((1.0 - sign * delta) / 3.0, (1.0 + 2.0 * sign * delta) / 3.0);
            for (w, e) in avg.weights.iter().zip([a, b, a]) {
                worst_w = worst_w.max((w - e).abs());
            }
        }
    }
    Ok((worst_h < 1e-10 && worst_w < 1e-14, format!("max relative H0 error {worst_h:.2e}, max weight error {worst_w:.2e}")))
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn magnus_scaling() -> Check {
    // Chemical-shift offsets supply the first-order term the 16-pulse cycle removes.
    let s = with_offsets(cluster(6, 5, 1e3)?, 2e3)?;
    let hy = dipolar_secular(&s, Axis::Y).map_err(err)?;
    let target = Propagator::new(&hy.scaled(0.4)).map_err(err)?;
    let taus = [1e-6, 2e-6, 4e-6, 8e-6];
    let mut slopes = Vec::new();
    for kind in [SequenceKind::P8, SequenceKind::P16] {
        let mut errs = Vec::new();
        for &tau in &taus {
            let seq = build_sequence(&SequenceSpec::new(kind, 0.4, tau, Direction::Forward)).map_err(err)?;
            let u = cycle_propagator(&seq, &s).map_err(err)?;
            errs.push((u.matrix() - target.unitary(seq.cycle_time)).norm());
        }
        slopes.push(loglog_slope(&taus, &errs));
    }
    let ok = slopes[0] >= 1.7 && slopes[1] - slopes[0] >= 0.7;
    Ok((ok, format!("8P slope {:.3}, 16P slope {:.3} (gain {:.3})", slopes[0], slopes[1], slopes[1] - slopes[0])))
}

fn self_time_collapse_check() -> Check {
    let dbar = 1e4;
    let s = cluster(8, 1, dbar)?;
    let deltas = [0.2, 0.3, 0.4];
    let stop = 5.0 / dbar;
    let mut ideal = Vec::new();
    for &d in &deltas {
        let times: Vec<f64> = (0..101).map(|k| stop * k as f64 / 100.0 / d).collect();
        ideal.push(magnetization_decay(&s, &Dynamics::scaled(d), &times).map_err(err)?);
    }
    let ideal_spread = self_time_collapse(&ideal, 101, Some(stop)).map_err(err)?.max_spread;
    let mut pulsed = Vec::new();
    for &d in &deltas {
        let seq = build_sequence(&SequenceSpec::new(SequenceKind::P8, d, 2e-6, Direction::Forward)).map_err(err)?;
        let count = (stop / d / seq.cycle_time).ceil() as usize + 2;
        let times = stroboscopic_times(seq.cycle_time, count, 1);
        pulsed.push(magnetization_decay(&s, &Dynamics::pulsed(seq), &times).map_err(err)?);
    }
    let pulsed_spread = self_time_collapse(&pulsed, 200, Some(stop)).map_err(err)?.max_spread;
    Ok((
        ideal_spread < 1e-10 && pulsed_spread < 0.02,
        format!("ideal spread {ideal_spread:.2e}, pulsed spread {pulsed_spread:.2e} over [0, 5/d] with d = 1e4 rad/s"),
    ))
}

fn perfect_reversal() -> Check {
    let s = cluster(8, 2, 1.0)?;
    let grids: Vec<Vec<f64>> = vec![
        (0..50).map(|k| 0.2 * k as f64).collect(),
        (0..30).map(|k| (k as f64).powf(1.7) * 0.37).collect(),
        vec![0.0, 1e-3, 123.4, 1e3],
    ];
    let mut worst: f64 = 0.0;
    for &d in &[0.1, 0.25, 0.5, 1.0] {
        for g in &grids {
            let m = loschmidt_echo(&s, &Dynamics::scaled(d), &Dynamics::scaled(-d), g).map_err(err)?;
            worst = worst.max(m.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
        }
    }
    Ok((worst < 1e-10, format!("max |M - 1| = {worst:.2e} over 4 scalings x 3 grids, N = 8")))
}

fn mqc_identities() -> Check {
    let s = cluster(8, 17, 1.0)?;
    let times = [0.0, 0.7, 1.9, 3.4, 6.0];
    let fwd = Dynamics::scaled(0.4);
    let backs = [
        Dynamics::scaled(-0.4),
        Dynamics::Ideal {
            hamiltonian: HamiltonianSpec::Composite {
                terms: vec![HamiltonianSpec::scaled_y(-0.4), HamiltonianSpec::DipolarSecular { axis: Axis::Z, scale: 0.05 }],
            },
        },
    ];
    let (mut sum_err, mut sym_err, mut odd_max, mut otoc_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (k, bwd) in backs.iter().enumerate() {
        let series = mqc_series(&s, &fwd, bwd, &times, 32).map_err(err)?;
        let echo = loschmidt_echo(&s, &fwd, bwd, &times).map_err(err)?;
        for (sp, m) in series.iter().zip(&echo.values) {
            sum_err = sum_err.max((sp.total() - m).abs());
            for (&q, &v) in sp.orders.iter().zip(&sp.s_q) {
                if let Some(mirror) = sp.intensity(-q) {
                    sym_err = sym_err.max((v - mirror).abs());
                }
                if q % 2 != 0 {
                    odd_max = odd_max.max(v.abs());
                }
            }
            if k == 0 {
                let czz = direct_oto_commutator(&s, &fwd, sp.t).map_err(err)?;
                otoc_err = otoc_err.max((otoc_second_moment(sp) - czz).abs());
            }
        }
    }
    let ok = sum_err < 1e-10 && sym_err < 1e-10 && odd_max < 1e-12 && otoc_err < 1e-8;
    Ok((ok, format!("sum rule {sum_err:.1e}, symmetry {sym_err:.1e}, odd orders {odd_max:.1e}, second moment vs commutator {otoc_err:.1e}")))
}

/// `Tr[I^z(t) I^z] / Tr[(I^z)^2]` for a pair from explicit Kronecker products.
fn pair_oracle(d: f64, delta: f64, t: f64) -> (f64, DMatrix<C64>) {
    let c = |re: f64, im: f64| C64::new(re, im);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.0, 0.0)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
    let id = DMatrix::<C64>::identity(2, 2);
    let h = (sy.kronecker(&sy) * c(2.0, 0.0) - sx.kronecker(&sx) - sz.kronecker(&sz)) * c(d * delta, 0.0);
    let iz = sz.kronecker(&id) + id.kronecker(&sz);
    let u = (h * c(0.0, -t)).exp();
    let izt = u.adjoint() * &iz * &u;
    ((&izt * &iz).trace().re / (&iz * &iz).trace().re, izt)
}

fn two_spin() -> Check {
    let (d, delta) = (2.0, 0.35);
    let s = SpinSystem::from_couplings(DMatrix::from_row_slice(2, 2, &[0.0, d, d, 0.0])).map_err(err)?;
    let times: Vec<f64> = (0..60).map(|k| 0.1 * k as f64).collect();
    let curve = magnetization_decay(&s, &Dynamics::scaled(delta), &times).map_err(err)?;
    let (mut cos_err, mut oracle_err, mut support_err) = (0.0f64, 0.0f64, 0.0f64);
    for (&t, &v) in times.iter().zip(&curve.values) {
        cos_err = cos_err.max((v - (1.5 * delta * d * t).cos()).abs());
        oracle_err = oracle_err.max((v - pair_oracle(d, delta, t).0).abs());
    }
    for &t in &[0.3, 1.1, 2.9, 5.0] {
        let sp = mqc_spectrum(&s, &Dynamics::scaled(delta), &Dynamics::scaled(-delta), t, 8).map_err(err)?;
        // oracle: order-resolved weights of the evolved operator
        let (_, izt) = pair_oracle(d, delta, t);
        let m = |state: usize| -((state & 1) as i64 + (state >> 1) as i64) + 1;
        let mut oracle = [0.0f64; 5];
        for r in 0..4 {
            for c2 in 0..4 {
                let order = m(r) - m(c2);
                oracle[(order + 2) as usize] += izt[(r, c2)].norm_sqr() / 2.0;
            }
        }
        for (&q, &v) in sp.orders.iter().zip(&sp.s_q) {
            let expected = if q.abs() <= 2 { oracle[(q + 2) as usize] } else { 0.0 };
            support_err = support_err.max((v - expected).abs());
            if ![0, 2, -2].contains(&q) {
                support_err = support_err.max(v.abs());
            }
        }
    }
    let ok = cos_err < 1e-10 && oracle_err < 1e-10 && support_err < 1e-10;
    Ok((ok, format!("cosine {cos_err:.1e}, 4x4 oracle {oracle_err:.1e}, MQC support {support_err:.1e}")))
}

fn golden_rule() -> Check {
    let gr = fgr_rate(2.08, 0.708).map_err(err)?;
    let ts = t_star(0.708);
    let ok = (gr.sigma_1 - 0.757).abs() < 5e-4 && (gr.sigma_1 - 0.759).abs() <= 0.232 && (ts - 1.998).abs() <= 1e-3;
    Ok((ok, format!("rate {:.4} 1/ms, T* {:.4} ms", gr.sigma_1, ts)))
}

fn count_passes(check: impl Fn(u64) -> bool) -> usize {
    (0..100u64).filter(|&seed| check(seed)).count()
}

fn fit_round_trips() -> Check {
    let mut rows = Vec::new();

    let (w, h) = (2.0 * PI * 10e3, 2.0 * PI * 6e3);
    let x = linear_grid(0.0, 1.5e-6, 60);
    let y: Vec<f64> = x.iter().map(|&t| abragam(w, h, t)).collect();
    rows.push((
        "abragam",
        count_passes(|k| {
            fit_abragam(&x, &add_noise(&y, Noise::Absolute(0.002), k), None)
                .map(|f| ((f.value("w") - w) / w).abs() < 0.01 && ((f.value("h") - h) / h).abs() < 0.01)
                .unwrap_or(false)
        }),
    ));

    let x = linear_grid(0.0, 0.05, 80);
    let y: Vec<f64> = x.iter().map(|&t| flambaum_izrailev(2.08, 0.708, t)).collect();
    rows.push((
        "flambaum_izrailev",
        count_passes(|k| {
            fit_flambaum_izrailev(&x, &add_noise(&y, Noise::Relative(5e-4), k))
                .map(|f| ((f.value("gamma") - 2.08) / 2.08).abs() < 0.01 && ((f.value("sigma") - 0.708) / 0.708).abs() < 0.01)
                .unwrap_or(false)
        }),
    ));

    let x = linear_grid(0.0, 0.05, 60);
    let y: Vec<f64> = x.iter().map(|&t| boltzmann(1.0, 0.0, 1.0, 0.2, t)).collect();
    rows.push((
        "boltzmann",
        count_passes(|k| {
            fit_boltzmann(&x, &add_noise(&y, Noise::Absolute(0.01), k), None)
                .map(|f| (f.value("x0") - 1.0).abs() < 0.05 && (f.value("dx") - 0.2).abs() < 0.05)
                .unwrap_or(false)
        }),
    ));

    let orders: Vec<i64> = (-32..32).collect();
    let y: Vec<f64> = orders.iter().map(|&q| (-(q * q) as f64 / 25.0).exp()).collect();
    rows.push((
        "gaussian_mqc",
        count_passes(|k| {
            fit_gaussian_orders(&orders, &add_noise(&y, Noise::Relative(0.02), k))
                .map(|f| ((f.value("N") - 5.0) / 5.0).abs() < 0.02)
                .unwrap_or(false)
        }),
    ));

    let x = log_grid(0.1, 1.0, 20);
    let y: Vec<f64> = x.iter().map(|&t| 3.0 * t.powf(1.5)).collect();
    rows.push((
        "power_law",
        count_passes(|k| {
            fit_power_law(&x, &add_noise(&y, Noise::Relative(0.02), k)).map(|f| (f.value("b") - 1.5).abs() < 0.02).unwrap_or(false)
        }),
    ));

    let x = linear_grid(0.02, 0.07, 15);
    let y: Vec<f64> = x.iter().map(|&v| (0.15f64 * 0.15 + v * v).sqrt()).collect();
    rows.push((
        "saturation",
        count_passes(|k| {
            fit_saturation(&x, &add_noise(&y, Noise::Absolute(0.01), k)).map(|f| (f.value("R") - 0.15).abs() < 0.04).unwrap_or(false)
        }),
    ));

    let ok = rows.iter().all(|(_, n)| *n >= 95);
    Ok((ok, rows.iter().map(|(m, n)| format!("{m} {n}/100")).collect::<Vec<_>>().join(", ")))
}

fn sequence_synthesis() -> Check {
    let s = with_offsets(cluster(4, 5, 1.0)?, 0.7)?;
    let hy = dipolar_secular(&s, Axis::Y).map_err(err)?;
    let hz = dipolar_secular(&s, Axis::Z).map_err(err)?;
    let mut counts = Vec::new();
    let mut worst: f64 = 0.0;
    for dir in [Direction::Forward, Direction::Backward] {
        let delays = delay_pattern_8p(dir).map_err(err)?;
        let hits = search_phase_patterns(&delays, AffineTarget::for_direction(dir));
        counts.push(hits.len());
        for p in hits {
            let mut spec = SequenceSpec::new(SequenceKind::P8, 0.25, 10e-6, dir);
            spec.phases = Some(p.to_vec());
            let seq = build_sequence(&spec).map_err(err)?;
            let avg = symbolic_average(&seq).map_err(err)?;
            let predicted = hy.scaled(avg.c_y).add(&hz.scaled(avg.c_z)).map_err(err)?;
            let h0 = numeric_average_hamiltonian(&seq, &s, 0).map_err(err)?;
            worst = worst.max(h0.sub(&predicted).map_err(err)?.frobenius_norm() / hy.frobenius_norm());
        }
    }
    let ok = counts.iter().all(|&c| c > 0) && worst < 1e-12;
    Ok((ok, format!("{} forward and {} backward hits, max numeric vs symbolic {worst:.1e}", counts[0], counts[1])))
}

const DETERMINISM_CONFIG: &str = r#"{
    "name": "determinism",
    "system": {"geometry": {"kind": "random_cluster"}, "n_spins": 6, "rms_coupling": 1e4, "seed": 7},
    "sequence": {"kind": "p8", "deltas": [0.1, 0.2, 0.3], "taus": [5e-6, 1e-5], "direction": "forward"},
    "protocol": {"kind": "echo"},
    "time_grid": {"kind": "cycles", "count": 12, "stride": 2}
}"#;

fn csv_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for sub in ["curves", "."] {
        let mut names: Vec<_> = std::fs::read_dir(dir.join(sub))
            .map_err(err)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        names.sort();
        for p in names {
            out.push((p.strip_prefix(dir).map_err(err)?.display().to_string(), std::fs::read(&p).map_err(err)?));
        }
    }
    Ok(out)
}

fn determinism(runner: &Runner) -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let config = tmp.path().join("config.json");
    std::fs::write(&config, DETERMINISM_CONFIG).map_err(err)?;
    let (a, b) = (tmp.path().join("one"), tmp.path().join("four"));
    runner(&config, &a, 1)?;
    runner(&config, &b, 4)?;
    let (fa, fb) = (csv_files(&a)?, csv_files(&b)?);
    let names_match = fa.iter().map(|f| &f.0).eq(fb.iter().map(|f| &f.0));
    let differing: Vec<&String> = fa.iter().zip(&fb).filter(|(x, y)| x.1 != y.1).map(|(x, _)| &x.0).collect();
    let ok = names_match && differing.is_empty() && fa.len() >= 6;
    Ok((ok, format!("{} CSV files compared between 1 and 4 workers, {} differ", fa.len(), differing.len())))
}
