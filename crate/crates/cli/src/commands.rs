use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use aperiodic_spectrum::lyapunov::lyapunov_estimate;
use aperiodic_spectrum::models::closed_form_invariant;
use aperiodic_spectrum::spectrum::{
    band_spectrum, box_dimension_from_covers, classify_grid, min_invariant_on_band, EnergyClass,
};
use aperiodic_spectrum::tracemap::{invariant_at, surface_mesh};
use aperiodic_spectrum::{EnergyGrid, Model};

use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};

/// Seventeen significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Output<'a> {
    dir: &'a Path,
    hash: String,
    written: Vec<PathBuf>,
}

impl Output<'_> {
    fn header(&self) -> String {
        format!("# config_hash={}\n", self.hash)
    }

    fn write(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, columns: &str, rows: &[String]) -> CliResult<()> {
        let mut body = self.header();
        body.push_str(columns);
        body.push('\n');
        for row in rows {
            body.push_str(row);
            body.push('\n');
        }
        self.write(name, &body)
    }
}

fn model(cfg: &RunConfig) -> &Model {
    &cfg.model.as_ref().expect("model checked when the config was built").model
}

fn grid(cfg: &RunConfig) -> CliResult<EnergyGrid> {
    Ok(EnergyGrid::uniform(cfg.window.0, cfg.window.1, cfg.grid)?)
}

/// Runs one command and returns the paths written, summary last.
pub fn execute(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let mut out = Output { dir: &cfg.out, hash: cfg.hash(), written: Vec::new() };
    let details = match cfg.command {
        Command::Bands => bands(cfg, &mut out)?,
        Command::Invariant => invariant(cfg, &mut out)?,
        Command::Escape => escape(cfg, &mut out)?,
        Command::Lyapunov => lyapunov(cfg, &mut out)?,
        Command::Dimension => dimension(cfg, &mut out)?,
        Command::Surface { invariant, half_width } => surface(cfg, invariant, half_width, &mut out)?,
    };
    let summary = json!({
        "config_hash": out.hash,
        "command": cfg.command.name(),
        "model": cfg.model.as_ref().map(|m| m.model.name()),
        "window": [cfg.window.0, cfg.window.1],
        "seed": cfg.seed,
        "files": out.written.iter().filter_map(|p| p.file_name()?.to_str()).collect::<Vec<_>>(),
        "results": details,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    out.write("summary.json", &text)?;
    Ok(out.written)
}

fn bands(cfg: &RunConfig, out: &mut Output) -> CliResult<Value> {
    let m = model(cfg);
    let covers = cfg
        .levels
        .par_iter()
        .map(|&n| band_spectrum(m, n, cfg.window))
        .collect::<Result<Vec<_>, _>>()?;
    let mut levels = Vec::new();
    for cover in &covers {
        let rows = cover
            .bands
            .iter()
            .map(|b| {
                let min_i = min_invariant_on_band(m, b)?;
                Ok(format!("{},{},{},{},{}", cover.level, num(b.e_lo), num(b.e_hi), num(b.length()), num(min_i)))
            })
            .collect::<CliResult<Vec<_>>>()?;
        out.csv(&format!("bands_n{}.csv", cover.level), "level,E_lo,E_hi,length,min_I_on_band", &rows)?;
        levels.push(json!({
            "level": cover.level,
            "band_count": cover.bands.len(),
            "total_measure": cover.total_measure,
        }));
    }
    Ok(json!({ "levels": levels }))
}

fn invariant(cfg: &RunConfig, out: &mut Output) -> CliResult<Value> {
    let m = model(cfg);
    let closed = cfg.model.as_ref().and_then(|l| l.closed_form);
    let grid = grid(cfg)?;
    let rows = grid
        .points()
        .par_iter()
        .map(|&e| {
            let numeric = invariant_at(m, e)?;
            let exact = closed.map_or(f64::NAN, |c| closed_form_invariant(&c, e).value);
            Ok((numeric, exact))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let max_diff = rows.iter().map(|(a, b)| (a - b).abs()).fold(f64::NAN, f64::max);
    let lines: Vec<String> = grid
        .points()
        .iter()
        .zip(&rows)
        .map(|(&e, &(a, b))| format!("{},{},{},{}", num(e), num(a), num(b), num((a - b).abs())))
        .collect();
    out.csv("invariant.csv", "E,I_numeric,I_closed_form,abs_diff", &lines)?;
    Ok(json!({
        "points": lines.len(),
        "closed_form": closed.is_some(),
        "max_abs_diff": if max_diff.is_finite() { Some(max_diff) } else { None },
    }))
}

fn escape(cfg: &RunConfig, out: &mut Output) -> CliResult<Value> {
    let classified = classify_grid(model(cfg), &grid(cfg)?, cfg.nmax)?;
    let mut counts = [0usize; 3];
    let lines: Vec<String> = classified
        .grid
        .points()
        .iter()
        .zip(&classified.classes)
        .zip(&classified.invariants)
        .map(|((&e, class), &i)| {
            counts[match class {
                EnergyClass::Escaped(_) => 0,
                EnergyClass::NotEscapedBy(_) => 1,
                EnergyClass::Undetermined(_) => 2,
            }] += 1;
            format!("{},{},{},{}", num(e), class.label(), class.index(), num(i))
        })
        .collect();
    out.csv("escape.csv", "E,class,escape_n,I", &lines)?;
    Ok(json!({
        "nmax": cfg.nmax,
        "escaped": counts[0],
        "bounded": counts[1],
        "undetermined": counts[2],
    }))
}

fn lyapunov(cfg: &RunConfig, out: &mut Output) -> CliResult<Value> {
    let m = model(cfg);
    let grid = grid(cfg)?;
    let jobs: Vec<(f64, usize)> =
        grid.points().iter().flat_map(|&e| cfg.levels.iter().map(move |&n| (e, n))).collect();
    let estimates = jobs
        .par_iter()
        .map(|&(e, n)| lyapunov_estimate(m, e, n))
        .collect::<Result<Vec<_>, _>>()?;
    let lines: Vec<String> = estimates
        .iter()
        .map(|est| {
            format!(
                "{},{},{},{},{},{}",
                num(est.energy),
                num(est.exponent),
                num(est.l_disc),
                num(est.mean_length),
                est.n_used,
                num(est.residual)
            )
        })
        .collect();
    out.csv("lyapunov.csv", "E,L,L_disc,s,n,residual", &lines)?;
    let min = estimates.iter().map(|e| e.exponent).fold(f64::INFINITY, f64::min);
    let max = estimates.iter().map(|e| e.exponent).fold(f64::NEG_INFINITY, f64::max);
    Ok(json!({ "rows": lines.len(), "min_L": min, "max_L": max }))
}

fn dimension(cfg: &RunConfig, out: &mut Output) -> CliResult<Value> {
    let m = model(cfg);
    let (n1, n2) = (cfg.levels[0], cfg.levels[1]);
    let c1 = band_spectrum(m, n1, cfg.window)?;
    let c2 = band_spectrum(m, n2, cfg.window)?;
    let estimate = box_dimension_from_covers(&c1, &c2)?;
    let k1 = c1.proper_bands().count().max(1);
    let k2 = c2.proper_bands().count().max(1);
    let eps1 = c1.total_measure / k1 as f64;
    let eps2 = c2.total_measure / k2 as f64;
    let line = format!("{n1},{n2},{k1},{k2},{},{},{}", num(eps1), num(eps2), num(estimate));
    out.csv("dimension.csv", "n1,n2,N1,N2,eps1,eps2,estimate", &[line])?;
    Ok(json!({ "estimate": estimate }))
}

fn surface(cfg: &RunConfig, level: f64, half_width: f64, out: &mut Output) -> CliResult<Value> {
    let mesh = surface_mesh(level, half_width, cfg.grid)?;
    let header = vec![format!("config_hash={}", out.hash)];
    let mut obj = Vec::new();
    mesh.write_obj(&mut obj, &header).map_err(|e| CliError::io(out.dir.join("surface.obj"), e))?;
    let mut csv = Vec::new();
    mesh.write_csv(&mut csv, &header).map_err(|e| CliError::io(out.dir.join("surface.csv"), e))?;
    out.write("surface.obj", &String::from_utf8(obj).expect("ascii output"))?;
    out.write("surface.csv", &String::from_utf8(csv).expect("ascii output"))?;
    Ok(json!({
        "invariant": level,
        "vertices": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "components": mesh.component_count(),
        "max_residual": mesh.max_residual(level),
    }))
}
