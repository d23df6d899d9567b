//! Random pencil families and the best/worst sweep driver.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Propagator;
use crate::fsio::write_atomic;
use crate::highprec::{relative_error, u_of_one_highprec, DEFAULT_DIGITS, MIN_DIGITS};
use crate::matcore::{ComplexMatrix, MatrixJson, C64};
use crate::pencil::{PencilJson, QuadraticPencil, Structure};
use crate::scoring::{
    catalog_pairs, exp_conditioning_lower_bound, PairCatalog, PairScore, RejectionCounts,
    ScoredSplitting, SearchOptions, DEFAULT_BUDGET,
};
use crate::solvent::{SolventOptions, SolventPair, DEFAULT_KAPPA_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Independent uniform real and imaginary parts.
    ComplexUniform,
    /// Real symmetric `B` and `C`.
    HermitianReal,
    /// Real skew-symmetric `B`, real symmetric `C`.
    GyroscopicReal,
}

impl Family {
    pub fn structure(self) -> Structure {
        match self {
            Family::ComplexUniform => Structure::General,
            Family::HermitianReal => Structure::Hermitian,
            Family::GyroscopicReal => Structure::Gyroscopic,
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex_uniform" | "complex" => Ok(Family::ComplexUniform),
            "hermitian_real" | "hermitian" => Ok(Family::HermitianReal),
            "gyroscopic_real" | "gyroscopic" => Ok(Family::GyroscopicReal),
            _ => Err(Error::InvalidInput(format!(
                "unknown family {s:?}; expected complex_uniform, hermitian_real or gyroscopic_real"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub family: Family,
    pub n: usize,
    pub scale_b: f64,
    pub scale_c: f64,
    pub seed: u64,
    /// Working precision of the oracle; `None` disables it.
    pub oracle_digits: Option<u32>,
    pub kappa_cap: f64,
    /// Splitting budget; `None` enumerates everything.
    pub budget: Option<u64>,
}

impl ExperimentSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            scale_b: 1.0,
            scale_c: 1.0,
            seed,
            oracle_digits: Some(DEFAULT_DIGITS),
            kappa_cap: DEFAULT_KAPPA_CAP,
            budget: Some(DEFAULT_BUDGET as u64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        for (name, v) in [
            ("scale_b", self.scale_b),
            ("scale_c", self.scale_c),
            ("kappa_cap", self.kappa_cap),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if let Some(d) = self.oracle_digits {
            if d < MIN_DIGITS {
                return Err(Error::InvalidInput(format!(
                    "oracle digits must be at least {MIN_DIGITS}"
                )));
            }
        }
        Ok(())
    }
}

/// Draws the coefficients with ChaCha8 seeded from `spec.seed`: all of `B`
/// first, then `C`, row by row, real part before imaginary part.
pub fn generate_pencil(spec: &ExperimentSpec) -> Result<QuadraticPencil> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut uniform = |s: f64| rng.random_range(-s..=s);
    let (b, c) = match spec.family {
        Family::ComplexUniform => {
            let b = ComplexMatrix::from_fn(n, n, |_, _| {
                C64::new(uniform(spec.scale_b), uniform(spec.scale_b))
            });
            let c = ComplexMatrix::from_fn(n, n, |_, _| {
                C64::new(uniform(spec.scale_c), uniform(spec.scale_c))
            });
            (b, c)
        }
        Family::HermitianReal => {
            let b = symmetric(n, || uniform(spec.scale_b));
            let c = symmetric(n, || uniform(spec.scale_c));
            (b, c)
        }
        Family::GyroscopicReal => {
            let mut b = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = uniform(spec.scale_b);
                    b[(i, j)] = C64::new(v, 0.0);
                    b[(j, i)] = C64::new(-v, 0.0);
                }
            }
            let c = symmetric(n, || uniform(spec.scale_c));
            (b, c)
        }
    };
    QuadraticPencil::new(b, c, spec.family.structure())
}

fn symmetric(n: usize, mut draw: impl FnMut() -> f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = C64::new(draw(), 0.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaJson {
    pub x1: f64,
    pub z1: f64,
    pub x: f64,
    pub z: f64,
    pub diff: f64,
    pub max: f64,
}

impl From<&PairScore> for KappaJson {
    fn from(s: &PairScore) -> Self {
        Self {
            x1: s.kappa_x1,
            z1: s.kappa_z1,
            x: s.kappa_x,
            z: s.kappa_z,
            diff: s.kappa_diff,
            max: s.kappa_max,
        }
    }
}

/// One scored pair as written to reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    /// Eigenvalue indices that make up `X`.
    pub splitting: Vec<usize>,
    pub kappa: KappaJson,
    pub norm_x: f64,
    pub norm_z: f64,
}

impl From<&ScoredSplitting> for PairRecord {
    fn from(s: &ScoredSplitting) -> Self {
        Self {
            splitting: s.splitting.part_x.clone(),
            kappa: KappaJson::from(&s.score),
            norm_x: s.score.norm_x,
            norm_z: s.score.norm_z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Position in the enumeration order of splittings.
    pub splitting_index: usize,
    pub part_x: Vec<usize>,
    pub part_z: Vec<usize>,
    pub kappa: KappaJson,
    /// `||X||`, a lower bound for the conditioning of `t -> e^{Xt}` at `t = 1`.
    pub exp_lower_bound_x: f64,
    pub exp_lower_bound_z: f64,
    pub solvent_x: MatrixJson,
    pub solvent_z: MatrixJson,
    /// Relative error of the double-precision `U(1)`; absent without oracle.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentTiming {
    pub catalog: Duration,
    pub oracle: Duration,
    pub total: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub pencil: PencilJson,
    pub eigenvalues: Vec<C64>,
    pub splitting_count: u64,
    pub rejected: RejectionCounts,
    pub pairs: Vec<PairRecord>,
    pub best: Selection,
    pub worst: Selection,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_best: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_worst: Option<f64>,
    /// Wall-clock timings; kept out of the serialized report so that it is
    /// reproducible byte for byte.
    #[serde(skip)]
    pub timing: ExperimentTiming,
}

impl ExperimentReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn selection(&self, which: Which) -> &Selection {
        match which {
            Which::Best => &self.best,
            Which::Worst => &self.worst,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Best,
    Worst,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::Best => "best",
            Which::Worst => "worst",
        }
    }
}

/// Double-precision `U(1)` against its high-precision recomputation.
pub fn oracle_eps(pair: &SolventPair, digits: u32) -> Result<f64> {
    let (u, _) = Propagator::new(pair)?.at(1.0)?;
    let high = u_of_one_highprec(&pair.x.x1, &pair.x.x2, &pair.z.x1, &pair.z.x2, digits)?;
    relative_error(&u, &high)
}

fn selection(entry: &ScoredSplitting, pair: &SolventPair, eps: Option<f64>) -> Selection {
    Selection {
        splitting_index: entry.score.splitting_index,
        part_x: entry.splitting.part_x.clone(),
        part_z: entry.splitting.part_z.clone(),
        kappa: KappaJson::from(&entry.score),
        exp_lower_bound_x: exp_conditioning_lower_bound(&pair.x.x, 1.0),
        exp_lower_bound_z: exp_conditioning_lower_bound(&pair.z.x, 1.0),
        solvent_x: MatrixJson::from(&pair.x.x),
        solvent_z: MatrixJson::from(&pair.z.x),
        eps,
    }
}

pub fn search_options(spec: &ExperimentSpec) -> SearchOptions {
    SearchOptions {
        mode: spec.family.structure(),
        solvent: SolventOptions {
            kappa_cap: spec.kappa_cap,
            ..SolventOptions::default()
        },
        budget: spec.budget.map(u128::from),
        ..SearchOptions::default()
    }
}

/// Generates the pencil, scores every admissible pair, selects best and
/// worst by `kappa_max` and, when enabled, runs the oracle on both.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let start = Instant::now();
    let pencil = generate_pencil(spec)?;
    let catalog = catalog_pairs(&pencil, &search_options(spec))?;
    let catalog_time = start.elapsed();
    build_report(spec, &pencil, &catalog, start, catalog_time)
}

fn build_report(
    spec: &ExperimentSpec,
    pencil: &QuadraticPencil,
    catalog: &PairCatalog,
    start: Instant,
    catalog_time: Duration,
) -> Result<ExperimentReport> {
    let (best, worst) = catalog.best_worst()?;
    let opts = search_options(spec).solvent;
    let best_pair = catalog.pair(pencil, best, &opts)?;
    let worst_pair = catalog.pair(pencil, worst, &opts)?;

    let oracle_start = Instant::now();
    let (eps_best, eps_worst) = match spec.oracle_digits {
        Some(d) => {
            let (b, w) = rayon::join(|| oracle_eps(&best_pair, d), || oracle_eps(&worst_pair, d));
            (Some(b?), Some(w?))
        }
        None => (None, None),
    };
    let oracle_time = oracle_start.elapsed();

    Ok(ExperimentReport {
        spec: spec.clone(),
        pencil: PencilJson::from(pencil),
        eigenvalues: catalog.eigenpairs.iter().map(|p| p.value).collect(),
        splitting_count: u64::try_from(catalog.attempted).unwrap_or(u64::MAX),
        rejected: catalog.rejected,
        pairs: catalog.scored.iter().map(PairRecord::from).collect(),
        best: selection(best, &best_pair, eps_best),
        worst: selection(worst, &worst_pair, eps_worst),
        eps_best,
        eps_worst,
        timing: ExperimentTiming {
            catalog: catalog_time,
            oracle: oracle_time,
            total: start.elapsed(),
        },
    })
}

/// Eigenvalues with their side (`'x'` or `'z'`) for one selection.
pub fn spectrum_points(report: &ExperimentReport, which: Which) -> Vec<(C64, char)> {
    let sel = report.selection(which);
    report
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, if sel.part_x.contains(&i) { 'x' } else { 'z' }))
        .collect()
}

pub fn spectrum_csv(points: &[(C64, char)]) -> String {
    let mut out = String::from("re,im,part\n");
    for (v, side) in points {
        let _ = writeln!(out, "{},{},{}", v.re, v.im, side);
    }
    out
}

const SVG_SIZE: f64 = 480.0;
const SVG_MARGIN: f64 = 48.0;

fn star(cx: f64, cy: f64, r: f64) -> String {
    (0..10)
        .map(|k| {
            let rad = if k % 2 == 0 { r } else { 0.45 * r };
            let a = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
            format!("{:.2},{:.2}", cx + rad * a.cos(), cy + rad * a.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Scatter plot of the eigenvalues: `X` side as filled circles, `Z` side
/// as stars. Each glyph carries its exact coordinates in `data-re`/`data-im`.
pub fn spectrum_svg(points: &[(C64, char)], title: &str) -> String {
    let reach = points
        .iter()
        .map(|(v, _)| v.re.abs().max(v.im.abs()))
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 1.1;
    let span = SVG_SIZE - 2.0 * SVG_MARGIN;
    let px = |re: f64| SVG_MARGIN + (re + reach) / (2.0 * reach) * span;
    let py = |im: f64| SVG_MARGIN + (reach - im) / (2.0 * reach) * span;
    let mid = SVG_SIZE / 2.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(s, r#"<title>{title}</title>"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (lo, hi) = (SVG_MARGIN, SVG_SIZE - SVG_MARGIN);
    let _ = writeln!(
        s,
        r#"<line x1="{lo}" y1="{mid}" x2="{hi}" y2="{mid}" stroke="gray"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{mid}" y1="{lo}" x2="{mid}" y2="{hi}" stroke="gray"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14">Re</text>"#,
        hi + 6.0,
        mid + 5.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14">Im</text>"#,
        mid - 8.0,
        lo - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{hi}" y="{}" font-size="11" text-anchor="end">{reach:.3e}</text>"#,
        mid + 16.0
    );
    for (v, side) in points {
        let (cx, cy) = (px(v.re), py(v.im));
        if *side == 'x' {
            let _ = writeln!(
                s,
                r#"<circle class="x" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="black" data-re="{}" data-im="{}"/>"#,
                v.re, v.im
            );
        } else {
            let _ = writeln!(
                s,
                r#"<polygon class="z" points="{}" fill="none" stroke="crimson" data-re="{}" data-im="{}"/>"#,
                star(cx, cy, 7.0),
                v.re,
                v.im
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `path` (SVG) and the CSV twin next to it.
pub fn emit_spectrum_plot(report: &ExperimentReport, which: Which, path: &Path) -> Result<()> {
    let points = spectrum_points(report, which);
    let sel = report.selection(which);
    let title = format!(
        "{} splitting {} of {:?} n={} seed={}: kappa_max={:e}",
        which.name(),
        sel.splitting_index,
        report.spec.family,
        report.spec.n,
        report.spec.seed,
        sel.kappa.max
    );
    write_atomic(path, spectrum_svg(&points, &title).as_bytes())?;
    write_atomic(
        &path.with_extension("csv"),
        spectrum_csv(&points).as_bytes(),
    )?;
    Ok(())
}

/// Writes `report.json`, `timing.json` and the four spectrum files into `dir`.
pub fn write_experiment(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("report.json"), report.to_json_string().as_bytes())?;
    let timing = serde_json::json!({
        "catalog_seconds": report.timing.catalog.as_secs_f64(),
        "oracle_seconds": report.timing.oracle.as_secs_f64(),
        "total_seconds": report.timing.total.as_secs_f64(),
    });
    write_atomic(
        &dir.join("timing.json"),
        serde_json::to_string_pretty(&timing)?.as_bytes(),
    )?;
    for which in [Which::Best, Which::Worst] {
        emit_spectrum_plot(
            report,
            which,
            &dir.join(format!("spectrum_{}.svg", which.name())),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_structure() {
        let h = generate_pencil(&ExperimentSpec::new(Family::HermitianReal, 2, 3)).unwrap();
        assert_eq!(h.b()[(0, 1)], h.b()[(1, 0)]);
        assert!(h.b().data().iter().chain(h.c().data()).all(|z| z.im == 0.0));
        let g = generate_pencil(&ExperimentSpec::new(Family::GyroscopicReal, 2, 3)).unwrap();
        assert_eq!(g.b()[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(g.b()[(1, 1)], C64::new(0.0, 0.0));
        assert_eq!(g.b()[(0, 1)], -g.b()[(1, 0)]);
        let mut spec = ExperimentSpec::new(Family::ComplexUniform, 10, 1);
        spec.scale_c = 10.0;
        let c = generate_pencil(&spec).unwrap();
        assert!(c
            .c()
            .data()
            .iter()
            .all(|z| z.re.abs() <= 10.0 && z.im.abs() <= 10.0));
        assert!(c.c().max_abs() > 1.0);
        assert!(c
            .b()
            .data()
            .iter()
            .all(|z| z.re.abs() <= 1.0 && z.im.abs() <= 1.0));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ExperimentSpec::new(Family::ComplexUniform, 3, 42);
        let a = generate_pencil(&spec).unwrap();
        let b = generate_pencil(&spec).unwrap();
        assert_eq!(a.b(), b.b());
        assert_eq!(a.c(), b.c());
        let other = generate_pencil(&ExperimentSpec::new(Family::ComplexUniform, 3, 43)).unwrap();
        assert_ne!(a.b(), other.b());
    }

    #[test]
    fn invalid_specs() {
        let mut s = ExperimentSpec::new(Family::ComplexUniform, 0, 1);
        assert!(generate_pencil(&s).is_err());
        s.n = 2;
        s.scale_b = 0.0;
        assert!(generate_pencil(&s).is_err());
        assert!("bogus".parse::<Family>().is_err());
        assert_eq!(
            "hermitian".parse::<Family>().unwrap(),
            Family::HermitianReal
        );
    }

    #[test]
    fn single_pair_experiment() {
        let mut spec = ExperimentSpec::new(Family::ComplexUniform, 1, 5);
        spec.oracle_digits = Some(40);
        let r = run_experiment(&spec).unwrap();
        assert_eq!(r.splitting_count, 1);
        assert_eq!(r.best, r.worst);
        assert_eq!(r.eps_best, r.eps_worst);
        assert!(r.eps_best.unwrap() < 1e-12);
        let csv = spectrum_csv(&spectrum_points(&r, Which::Best));
        assert_eq!(csv.lines().count(), 3);
    }
}
