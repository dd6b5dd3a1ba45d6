// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Plot-ready CSV tables, one per standard figure.

use std::path::{Path, PathBuf};

use spinscale_core::analysis::{fit_flambaum_izrailev, fit_gaussian_mqc, flambaum_izrailev};

use crate::analyze::saturation_points;
use crate::error::{CliError, CliResult};
use crate::io::CsvTable;
use crate::run::{primary_curve, CellData, ResultRecord};

pub const FIG_SELFTIME: &str = "fig2_selftime.csv";
pub const FIG_SPINCOUNT: &str = "fig3_spincount.csv";
pub const FIG_SATURATION: &str = "fig4_saturation.csv";
pub const FIG_LE0: &str = "fig_appendix_le0.csv";
pub const MQC_SPECTRA: &str = "mqc_spectra.csv";

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn tau(c: &CellData) -> String {
    c.cell.tau.map(num).unwrap_or_default()
}

/// Signal against self-time for every cell.
pub fn selftime_table(record: &ResultRecord, cells: &[CellData]) -> Option<CsvTable> {
    let name = primary_curve(&record.config.protocol);
    let mut t = CsvTable::with_header(
        ["delta (1)", "tau (s)", "time (s)", "self_time (s)"].iter().map(|s| s.to_string()).chain([format!("{name} (1)")]).collect(),
    );
    for c in cells {
        let Some(curve) = c.curve(name) else { continue };
        for i in 0..curve.len() {
            t.push_text(vec![num(c.cell.delta), tau(c), num(curve.times[i]), num(curve.self_times[i]), num(curve.values[i])]);
        }
    }
    (!t.is_empty()).then_some(t)
}

/// Gaussian and second-moment spin counts against self-time.
pub fn spincount_table(cells: &[CellData]) -> Option<CsvTable> {
    let mut t = CsvTable::new(&["delta (1)", "tau (s)", "time (s)", "self_time (s)", "N_gauss (1)", "N_sqrt (1)", "second_moment (1)"]);
    for c in cells {
        for s in c.spectra.iter().filter(|s| s.t > 0.0) {
            let n = fit_gaussian_mqc(s).map(|f| num(f.value("N"))).unwrap_or_default();
            t.push_text(vec![
                num(c.cell.delta),
                tau(c),
                num(s.t),
                num(s.t * c.cell.delta),
                n,
                num(s.second_moment.max(0.0).sqrt()),
                num(s.second_moment),
            ]);
        }
    }
    (!t.is_empty()).then_some(t)
}

/// `q` against `S_q` per time point.
pub fn spectra_table(cells: &[CellData]) -> Option<CsvTable> {
    let mut t = CsvTable::new(&["delta (1)", "tau (s)", "time (s)", "q (1)", "S_q (1)"]);
    for c in cells {
        for s in &c.spectra {
            for (&q, &v) in s.orders.iter().zip(&s.s_q) {
                t.push_text(vec![num(c.cell.delta), tau(c), num(s.t), q.to_string(), num(v)]);
            }
        }
    }
    (!t.is_empty()).then_some(t)
}

pub fn saturation_table(cells: &[CellData]) -> Option<CsvTable> {
    let (points, _) = saturation_points(cells);
    let mut t = CsvTable::new(&["delta (1)", "tau (s)", "T2 (s)", "T3 (s)", "T_sigma (s)", "T2/T_sigma (1)", "T2/T3 (1)"]);
    for p in &points {
        t.push_text(vec![
            num(p.delta),
            p.tau.map(num).unwrap_or_default(),
            num(p.t2),
            num(p.t3),
            num(p.t_sigma),
            num(p.x()),
            num(p.y()),
        ]);
    }
    (!t.is_empty()).then_some(t)
}

/// Zero-scaling echo with its decay-model fit, when the fit succeeds.
pub fn le0_table(cells: &[CellData]) -> Option<CsvTable> {
    let mut t = CsvTable::new(&["delta (1)", "tau (s)", "time (s)", "M0 (1)", "M0_fit (1)"]);
    for c in cells {
        let Some(m0) = c.curve("M0") else { continue };
        let fit = fit_flambaum_izrailev(&m0.times, &m0.values).ok();
        for (&time, &v) in m0.times.iter().zip(&m0.values) {
            let model = fit
                .as_ref()
                .map(|f| num(flambaum_izrailev(f.value("gamma"), f.value("sigma"), time)))
                .unwrap_or_default();
            t.push_text(vec![num(c.cell.delta), tau(c), num(time), num(v), model]);
        }
    }
    (!t.is_empty()).then_some(t)
}

/// Write every table the stored protocol supports into `<results>/plots`.
pub fn plotdata(results: &Path) -> CliResult<Vec<PathBuf>> {
    let record = ResultRecord::load(results)?;
    let cells = record.load_cells(results)?;
    let dir = results.join("plots");
    let tables = [
        (FIG_SELFTIME, selftime_table(&record, &cells)),
        (FIG_SPINCOUNT, spincount_table(&cells)),
        (MQC_SPECTRA, spectra_table(&cells)),
        (FIG_SATURATION, saturation_table(&cells)),
        (FIG_LE0, le0_table(&cells)),
    ];
    let mut written = Vec::new();
    for (name, table) in tables {
        if let Some(t) = table {
            let path = dir.join(name);
            t.write(&path)?;
            written.push(path);
        }
    }
    if written.is_empty() {
        return Err(CliError::NoMatch("any figure table".into()));
    }
    Ok(written)
}
