//! The convergence-study harness: run the single- or multi-level scheme over
//! a nested hierarchy, self-reference errors against the finest level, and
//! emit machine-readable tables and plot data.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::assembly::Triple;
use crate::eigensolve::{solve_mixed, EigenMode, IterationSettings};
use crate::multilevel::{build_hierarchy, eigenfunction_errors, multilevel_eigs, Domain};
use crate::{FemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy)]
pub struct StudyConfig {
    pub domain: Domain,
    pub triple: Triple,
    pub method: Method,
    /// Number of refinements N; levels 0..=N are solved, level N is the
    /// self-reference.
    pub levels: usize,
    pub num_eigs: usize,
    pub n0: usize,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            domain: Domain::Square,
            triple: Triple::B,
            method: Method::Single,
            levels: 5,
            num_eigs: 6,
            n0: 4,
            seed: 0,
        }
    }
}

/// Everything the CLI and the table tests consume.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub config: StudyConfig,
    /// Measured mesh size per level.
    pub mesh_sizes: Vec<f64>,
    /// λ per level and eigenvalue index, levels 0..=N.
    pub lambdas: Vec<Vec<f64>>,
    /// Signed eigenvalue error per level (None on the reference level); the
    /// sign convention follows the detected trend so that asymptotically the
    /// error is positive.
    pub errors: Vec<Vec<Option<f64>>>,
    /// Convergence orders of Eq-style self-referenced ratios, defined for
    /// levels 1..=N−1 where consecutive errors are nonzero.
    pub ord_lambda: Vec<Vec<Option<f64>>>,
    pub ord_u: Vec<Vec<Option<f64>>>,
    /// H¹ errors of the u-components against the reference level.
    pub u_errors: Vec<Vec<f64>>,
    /// Trend of the tabulated levels 1..=N−1 per eigenvalue, e.g. "↗", "↘↗".
    pub trends: Vec<String>,
    /// Wall-clock seconds per level.
    pub seconds: Vec<f64>,
    /// Richardson extrapolation from the last level pair at the triple's
    /// theoretical rate; informational only.
    pub extrapolated: Vec<f64>,
}

/// Run the configured study end to end.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    if config.levels < 1 {
        return Err(FemError::InvalidArgument("a study needs at least one level".into()));
    }
    if config.num_eigs < 1 {
        return Err(FemError::InvalidArgument("a study needs at least one eigenvalue".into()));
    }
    let hier = build_hierarchy(config.domain, config.n0, config.levels, config.triple)?;
    let n = config.levels;
    let k = config.num_eigs;

    let mut lambdas: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut per_level_u: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n + 1);
    let mut seconds = Vec::with_capacity(n + 1);

    match config.method {
        Method::Single => {
            let settings = IterationSettings {
                seed: config.seed,
                ..IterationSettings::default()
            };
            let mut warm: Vec<Vec<f64>> = Vec::new();
            for level in 0..=n {
                let t = Instant::now();
                let pairs = solve_mixed(&hier.systems[level], k, EigenMode::Sparse, &warm, settings)?;
                seconds.push(t.elapsed().as_secs_f64());
                lambdas.push(pairs.iter().map(|p| p.lambda).collect());
                let n_s = hier.systems[level].scalar_space.dof_count;
                per_level_u.push(pairs.iter().map(|p| p.vector[0..n_s].to_vec()).collect());
                if level < n {
                    warm = pairs
                        .iter()
                        .map(|p| hier.prolongate_full(level, &p.vector))
                        .collect();
                }
            }
        }
        Method::Multi => {
            let out = multilevel_eigs(&hier, k)?;
            lambdas = out.per_level_lambdas;
            seconds = out.per_level_seconds;
            for (level, vectors) in out.per_level_vectors.iter().enumerate() {
                let n_s = hier.systems[level].scalar_space.dof_count;
                per_level_u.push(vectors.iter().map(|v| v[0..n_s].to_vec()).collect());
            }
        }
    }

    let u_errors = eigenfunction_errors(&hier, &per_level_u, n, &lambdas[n])?;

    let mut trends = Vec::with_capacity(k);
    let mut errors = vec![vec![None; k]; n + 1];
    let mut ord_lambda = vec![vec![None; k]; n + 1];
    let mut ord_u = vec![vec![None; k]; n + 1];
    for j in 0..k {
        let series: Vec<f64> = (1..n).map(|l| lambdas[l][j]).collect();
        let trend = trend_symbol(&series);
        let reference = lambdas[n][j];
        let sign = if trend.ends_with('↘') { -1.0 } else { 1.0 };
        for l in 0..n {
            errors[l][j] = Some(sign * (reference - lambdas[l][j]));
        }
        for l in 1..n {
            let prev = reference - lambdas[l - 1][j];
            let cur = reference - lambdas[l][j];
            if prev != 0.0 && cur != 0.0 && (prev / cur) > 0.0 {
                ord_lambda[l][j] = Some((prev / cur).abs().log2());
            }
            let prev_u = u_errors[l - 1][j];
            let cur_u = u_errors[l][j];
            if prev_u > 0.0 && cur_u > 0.0 {
                ord_u[l][j] = Some((prev_u / cur_u).log2());
            }
        }
        trends.push(trend);
    }

    let rate = config.triple.eigenvalue_rate();
    let extrapolated = (0..k)
        .map(|j| {
            let last = lambdas[n][j];
            let prev = lambdas[n - 1][j];
            last + (last - prev) / (2f64.powf(rate) - 1.0)
        })
        .collect();

    Ok(StudyResult {
        config: *config,
        mesh_sizes: hier.meshes.iter().map(|m| m.mesh_size).collect(),
        lambdas,
        errors,
        ord_lambda,
        ord_u,
        u_errors,
        trends,
        seconds,
        extrapolated,
    })
}

/// Compress the signs of consecutive differences into arrows:
/// monotone up "↗", monotone down "↘", down-then-up "↘↗", and so on.
pub fn trend_symbol(series: &[f64]) -> String {
    let mut out = String::new();
    let mut last: Option<char> = None;
    for w in series.windows(2) {
        let arrow = if w[1] > w[0] { '↗' } else { '↘' };
        if last != Some(arrow) {
            out.push(arrow);
            last = Some(arrow);
        }
    }
    out
}

/// Least-squares slope of log|y| against log x.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let filtered: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y != 0.0)
        .map(|&(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if filtered.len() < 2 {
        return None;
    }
    let m = filtered.len() as f64;
    let sx: f64 = filtered.iter().map(|p| p.0).sum();
    let sy: f64 = filtered.iter().map(|p| p.1).sum();
    let sxx: f64 = filtered.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = filtered.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    (denom != 0.0).then(|| (m * sxy - sx * sy) / denom)
}

/// Write the study table as CSV with the fixed schema
/// `eig_index,level,lambda,error,ord_lambda,ord_u,trend,seconds`.
pub fn emit_csv(result: &StudyResult, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "eig_index,level,lambda,error,ord_lambda,ord_u,trend,seconds")?;
    let n = result.config.levels;
    let fmt_opt = |v: Option<f64>, precision: usize| match v {
        Some(x) => format!("{x:.precision$}"),
        None => String::new(),
    };
    for j in 0..result.config.num_eigs {
        for level in 0..=n {
            let err = match result.errors[level][j] {
                Some(e) => format!("{e:.6e}"),
                None => String::new(),
            };
            writeln!(
                out,
                "{},{},{:.5},{},{},{},{},{:.3}",
                j + 1,
                level,
                result.lambdas[level][j],
                err,
                fmt_opt(result.ord_lambda[level][j], 5),
                fmt_opt(result.ord_u[level][j], 5),
                result.trends[j],
                result.seconds[level],
            )?;
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write per-eigenvalue (h, |error|) series, one plain two-column file per
/// eigenvalue, plus a reference-slope line fitted across all series.
pub fn emit_plotdata(result: &StudyResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let n = result.config.levels;
    let mut all_points = Vec::new();
    for j in 0..result.config.num_eigs {
        let mut out = Vec::new();
        writeln!(out, "# h abs_lambda_error (eigenvalue {})", j + 1)?;
        for level in 1..n {
            if let Some(e) = result.errors[level][j] {
                if e != 0.0 {
                    writeln!(out, "{:.8e} {:.8e}", result.mesh_sizes[level], e.abs())?;
                    all_points.push((result.mesh_sizes[level], e.abs()));
                }
            }
        }
        fs::write(dir.join(format!("plot_eig{}.dat", j + 1)), out)?;
    }
    if let Some(slope) = log_log_slope(&all_points) {
        let (h0, e0) = all_points[0];
        let h1 = all_points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let mut out = Vec::new();
        writeln!(out, "# reference slope {slope:.3}")?;
        writeln!(out, "{:.8e} {:.8e}", h0, e0)?;
        writeln!(out, "{:.8e} {:.8e}", h1, e0 * (h1 / h0).powf(slope))?;
        fs::write(dir.join("plot_slope.dat"), out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_symbols() {
        assert_eq!(trend_symbol(&[1.0, 2.0, 3.0]), "↗");
        assert_eq!(trend_symbol(&[3.0, 2.0, 1.0]), "↘");
        assert_eq!(trend_symbol(&[3.0, 1.0, 2.0]), "↘↗");
        assert_eq!(trend_symbol(&[1.0, 3.0, 2.0]), "↗↘");
        assert_eq!(trend_symbol(&[1.0]), "");
    }

    #[test]
    fn slope_of_pure_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| {
            let h = 0.5f64.powi(i);
            (h, 3.0 * h.powi(4))
        }).collect();
        let s = log_log_slope(&pts).unwrap();
        assert!((s - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_study_runs_and_emits() {
        let config = StudyConfig {
            levels: 2,
            num_eigs: 2,
            n0: 2,
            ..StudyConfig::default()
        };
        let result = run_study(&config).unwrap();
        assert_eq!(result.lambdas.len(), 3);
        assert_eq!(result.trends.len(), 2);
        // eigenvalues are positive and decrease toward the reference for triple B
        for l in 0..3 {
            for j in 0..2 {
                assert!(result.lambdas[l][j] > 0.0);
            }
        }

        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("study.csv");
        emit_csv(&result, &csv_path).unwrap();
        let text = fs::read_to_string(&csv_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "eig_index,level,lambda,error,ord_lambda,ord_u,trend,seconds"
        );
        // k rows per level, levels 0..=2
        assert_eq!(text.lines().count(), 1 + 2 * 3);

        emit_plotdata(&result, dir.path()).unwrap();
        assert!(dir.path().join("plot_eig1.dat").exists());

        // emitting the same result twice is byte-identical
        let second = dir.path().join("again.csv");
        emit_csv(&result, &second).unwrap();
        assert_eq!(fs::read(&csv_path).unwrap(), fs::read(&second).unwrap());
    }

    #[test]
    fn zero_eigs_rejected() {
        let config = StudyConfig {
            num_eigs: 0,
            ..StudyConfig::default()
        };
        assert!(run_study(&config).is_err());
    }
}
