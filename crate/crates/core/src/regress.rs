//! Pooled least squares with absorbed sector effects, and the pre/post
//! difference test.
//!
//! The model regresses the windowed change `y` on `PRE·NEWS`, `POST·NEWS` and
//! the market control `X`, with one fixed effect per sector and no other
//! intercept. Sector effects are absorbed by subtracting group means; the
//! three remaining columns are solved by a tall-skinny QR of the augmented
//! matrix `[X | y]`.
//!
//! The QR runs over fixed chunks of [`CHUNK_ROWS`] rows. Each chunk is
//! reduced to a 4x4 triangular factor and the factors are merged pairwise in
//! chunk order, so the result does not depend on how many threads ran it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::panel::{Mode, Observation, Panel};
use crate::sentiment::Polarity;

/// Rows per QR chunk. Changing it changes results in the last bits.
pub const CHUNK_ROWS: usize = 4096;

/// Relative pivot size below which a column counts as linearly dependent.
const RANK_TOLERANCE: f64 = 1e-10;

pub const COLUMN_NAMES: [&str; 3] = ["pre_news", "post_news", "market_x"];

pub const FIT_HEADER: &str =
    "mode,polarity,w,beta_pre,se_pre,beta_post,se_post,beta_x,se_x,diff,diff_se,diff_t,diff_p,n_obs";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegressError {
    #[error("panel is empty")]
    Empty,
    #[error("column lengths differ")]
    ShapeMismatch,
    #[error("regressor `{0}` is collinear with the other columns after demeaning")]
    Collinear(&'static str),
    #[error("not enough observations: {n_obs} rows, {n_sectors} sectors, 3 slopes")]
    InsufficientData { n_obs: usize, n_sectors: usize },
    #[error("zero variance for a non-zero difference")]
    DegenerateVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Covariance {
    /// sigma^2 (X'X)^-1 with sigma^2 = RSS / dof.
    #[default]
    Homoskedastic,
    /// White sandwich scaled by n / dof.
    Hc1,
}

/// Per-sector means removed by the within transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupMeans {
    pub n: usize,
    pub y: f64,
    pub x: [f64; 3],
}

/// Demeaned response and regressors.
#[derive(Debug, Clone)]
pub struct Demeaned {
    pub y: Vec<f64>,
    pub x: [Vec<f64>; 3],
    pub groups: BTreeMap<String, GroupMeans>,
}

impl Demeaned {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    /// Singleton groups demean to all-zero rows.
    pub fn n_singletons(&self) -> usize {
        self.groups.values().filter(|g| g.n == 1).count()
    }
}

/// Subtracts sector means from `y` and the three regressor columns.
pub fn demean_columns(
    groups: &[&str],
    y: &[f64],
    x: [&[f64]; 3],
) -> Result<Demeaned, RegressError> {
    let n = y.len();
    if n == 0 {
        return Err(RegressError::Empty);
    }
    if groups.len() != n || x.iter().any(|c| c.len() != n) {
        return Err(RegressError::ShapeMismatch);
    }
    let mut sums: BTreeMap<&str, (usize, f64, [f64; 3])> = BTreeMap::new();
    for i in 0..n {
        let e = sums.entry(groups[i]).or_insert((0, 0.0, [0.0; 3]));
        e.0 += 1;
        e.1 += y[i];
        for k in 0..3 {
            e.2[k] += x[k][i];
        }
    }
    let means: BTreeMap<&str, GroupMeans> = sums
        .into_iter()
        .map(|(g, (cnt, sy, sx))| {
            let c = cnt as f64;
            (
                g,
                GroupMeans {
                    n: cnt,
                    y: sy / c,
                    x: sx.map(|s| s / c),
                },
            )
        })
        .collect();
    let mut dy = Vec::with_capacity(n);
    let mut dx: [Vec<f64>; 3] = Default::default();
    for i in 0..n {
        let m = &means[groups[i]];
        if m.n == 1 {
            dy.push(0.0);
            for col in dx.iter_mut() {
                col.push(0.0);
            }
            continue;
        }
        dy.push(y[i] - m.y);
        for k in 0..3 {
            dx[k].push(x[k][i] - m.x[k]);
        }
    }
    Ok(Demeaned {
        y: dy,
        x: dx,
        groups: means.into_iter().map(|(g, m)| (g.to_string(), m)).collect(),
    })
}

/// Raw design columns: (sector keys, y, [PRE·NEWS, POST·NEWS, X]).
pub fn design_columns(panel: &[Observation]) -> (Vec<&str>, Vec<f64>, [Vec<f64>; 3]) {
    let groups = panel.iter().map(|o| o.sector.as_str()).collect();
    let y = panel.iter().map(|o| o.y).collect();
    let pre = panel.iter().map(|o| o.pre() * o.news_value).collect();
    let post = panel.iter().map(|o| o.post() * o.news_value).collect();
    let x = panel.iter().map(|o| o.market_x).collect();
    (groups, y, [pre, post, x])
}

/// Within transform of a panel: sector means removed from `y`,
/// `PRE·NEWS`, `POST·NEWS` and `X`.
pub fn within_transform(panel: &[Observation]) -> Result<Demeaned, RegressError> {
    let (g, y, [a, b, c]) = design_columns(panel);
    demean_columns(&g, &y, [&a, &b, &c])
}

/// Slopes and covariance of a three-column least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta: [f64; 3],
    pub cov: [[f64; 3]; 3],
    pub rss: f64,
    pub n_obs: usize,
    /// Number of absorbed group effects.
    pub n_absorbed: usize,
    pub dof: usize,
}

impl OlsFit {
    pub fn se(&self, k: usize) -> f64 {
        self.cov[k][k].max(0.0).sqrt()
    }

    pub fn residuals(&self, d: &Demeaned) -> Vec<f64> {
        (0..d.n_obs())
            .map(|i| d.y[i] - (0..3).map(|k| self.beta[k] * d.x[k][i]).sum::<f64>())
            .collect()
    }
}

type Tri = [[f64; 4]; 4];

/// Householder QR of `rows` (an m x 4 matrix), returning the 4x4 R factor.
fn householder_r(rows: &mut [[f64; 4]]) -> Tri {
    let m = rows.len();
    for k in 0..4.min(m) {
        let norm = rows[k..].iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if rows[k][k] > 0.0 { -norm } else { norm };
        // v = a_k - alpha e_k, stored in column k below the diagonal
        let v0 = rows[k][k] - alpha;
        let vnorm2 = v0 * v0 + rows[k + 1..].iter().map(|r| r[k] * r[k]).sum::<f64>();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k + 1..4 {
            let s = v0 * rows[k][j] + rows[k + 1..].iter().map(|r| r[k] * r[j]).sum::<f64>();
            let f = 2.0 * s / vnorm2;
            rows[k][j] -= f * v0;
            for r in rows[k + 1..].iter_mut() {
                r[j] -= f * r[k];
            }
        }
        rows[k][k] = alpha;
        for r in rows[k + 1..].iter_mut() {
            r[k] = 0.0;
        }
    }
    let mut out = [[0.0; 4]; 4];
    for (i, r) in rows.iter().take(4).enumerate() {
        out[i][i..4].copy_from_slice(&r[i..4]);
    }
    out
}

fn merge(a: &Tri, b: &Tri) -> Tri {
    let mut stacked = [a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]];
    householder_r(&mut stacked)
}

/// R factor of the augmented matrix `[x0 x1 x2 y]`, computed chunkwise.
fn augmented_r(d: &Demeaned) -> Tri {
    let n = d.n_obs();
    let n_chunks = n.div_ceil(CHUNK_ROWS).max(1);
    let mut level: Vec<Tri> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK_ROWS;
            let hi = (lo + CHUNK_ROWS).min(n);
            let mut rows: Vec<[f64; 4]> = (lo..hi)
                .map(|i| [d.x[0][i], d.x[1][i], d.x[2][i], d.y[i]])
                .collect();
            householder_r(&mut rows)
        })
        .collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => merge(a, b),
                [a] => *a,
                _ => unreachable!(),
            })
            .collect();
    }
    level[0]
}

fn upper_inverse(r: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut inv = [[0.0; 3]; 3];
    for j in 0..3 {
        inv[j][j] = 1.0 / r[j][j];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| r[i][k] * inv[k][j]).sum();
            inv[i][j] = -s / r[i][i];
        }
    }
    inv
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn transpose(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// Least squares on demeaned columns. `names` label the columns in
/// collinearity errors.
pub fn ols(d: &Demeaned, covariance: Covariance) -> Result<OlsFit, RegressError> {
    ols_named(d, covariance, COLUMN_NAMES)
}

pub fn ols_named(
    d: &Demeaned,
    covariance: Covariance,
    names: [&'static str; 3],
) -> Result<OlsFit, RegressError> {
    let n = d.n_obs();
    if n == 0 {
        return Err(RegressError::Empty);
    }
    let g = d.groups.len();
    if n <= g + 3 {
        return Err(RegressError::InsufficientData {
            n_obs: n,
            n_sectors: g,
        });
    }
    let dof = n - g - 3;
    let aug = augmented_r(d);
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = aug[i][j];
        }
    }
    // An identically zero control (a flat market index) is omitted rather
    // than reported as collinear; its slope and variance are set to zero.
    let control_zero = d.x[2].iter().all(|v| *v == 0.0);
    let k = if control_zero { 2 } else { 3 };
    for j in 0..k {
        let col_norm = (0..=j).map(|i| r[i][j] * r[i][j]).sum::<f64>().sqrt();
        if col_norm == 0.0 || r[j][j].abs() <= RANK_TOLERANCE * col_norm {
            return Err(RegressError::Collinear(names[j]));
        }
    }
    let qty = [aug[0][3], aug[1][3], aug[2][3]];
    let rss = (k..4).map(|i| aug[i][3] * aug[i][3]).sum::<f64>();
    if control_zero {
        r[2][2] = 1.0;
    }
    let mut rinv = upper_inverse(&r);
    if control_zero {
        for row in rinv.iter_mut() {
            row[2] = 0.0;
        }
        rinv[2] = [0.0; 3];
    }
    let mut beta = [0.0; 3];
    for i in 0..3 {
        beta[i] = (i..3).map(|k| rinv[i][k] * qty[k]).sum();
    }
    let xtx_inv = mat_mul(&rinv, &transpose(&rinv));
    let cov = match covariance {
        Covariance::Homoskedastic => {
            let s2 = rss / dof as f64;
            xtx_inv.map(|row| row.map(|v| v * s2))
        }
        Covariance::Hc1 => {
            let meat = hc_meat(d, &beta);
            let sandwich = mat_mul(&mat_mul(&xtx_inv, &meat), &xtx_inv);
            let scale = n as f64 / dof as f64;
            sandwich.map(|row| row.map(|v| v * scale))
        }
    };
    Ok(OlsFit {
        beta,
        cov,
        rss,
        n_obs: n,
        n_absorbed: g,
        dof,
    })
}

/// Sum of e_i^2 x_i x_i' accumulated per chunk and added in chunk order.
fn hc_meat(d: &Demeaned, beta: &[f64; 3]) -> [[f64; 3]; 3] {
    let n = d.n_obs();
    let partial: Vec<[[f64; 3]; 3]> = (0..n.div_ceil(CHUNK_ROWS))
        .into_par_iter()
        .map(|c| {
            let mut m = [[0.0; 3]; 3];
            for i in c * CHUNK_ROWS..((c + 1) * CHUNK_ROWS).min(n) {
                let xi = [d.x[0][i], d.x[1][i], d.x[2][i]];
                let e = d.y[i] - (0..3).map(|k| beta[k] * xi[k]).sum::<f64>();
                for a in 0..3 {
                    for b in 0..3 {
                        m[a][b] += e * e * xi[a] * xi[b];
                    }
                }
            }
            m
        })
        .collect();
    let mut meat = [[0.0; 3]; 3];
    for m in partial {
        for a in 0..3 {
            for b in 0..3 {
                meat[a][b] += m[a][b];
            }
        }
    }
    meat
}

/// Net disclosure effect `beta_post - beta_pre` and its t test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffTest {
    pub diff: f64,
    pub diff_se: f64,
    pub diff_t: f64,
    pub diff_p: f64,
}

/// Two-sided p value of `t` under a t distribution with `dof` degrees of freedom.
pub fn two_sided_p(t: f64, dof: usize) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("dof is positive");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

pub fn diff_test(
    beta_pre: f64,
    beta_post: f64,
    var_pre: f64,
    var_post: f64,
    cov_prepost: f64,
    dof: usize,
) -> Result<DiffTest, RegressError> {
    let diff = beta_post - beta_pre;
    let var = var_pre + var_post - 2.0 * cov_prepost;
    let diff_se = var.max(0.0).sqrt();
    if diff_se == 0.0 {
        if diff != 0.0 {
            return Err(RegressError::DegenerateVariance);
        }
        return Ok(DiffTest {
            diff,
            diff_se,
            diff_t: 0.0,
            diff_p: 1.0,
        });
    }
    let diff_t = diff / diff_se;
    Ok(DiffTest {
        diff,
        diff_se,
        diff_t,
        diff_p: two_sided_p(diff_t, dof),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub mode: Mode,
    pub polarity: Polarity,
    pub w: u32,
    pub beta_pre: f64,
    pub beta_post: f64,
    pub beta_x: f64,
    pub se_pre: f64,
    pub se_post: f64,
    pub se_x: f64,
    pub cov_prepost: f64,
    pub n_obs: usize,
    pub n_sectors: usize,
    pub dof: usize,
    pub rss: f64,
    pub diff: f64,
    pub diff_se: f64,
    pub diff_t: f64,
    pub diff_p: f64,
    pub covariance: Covariance,
}

impl FitResult {
    pub fn t_pre(&self) -> f64 {
        self.beta_pre / self.se_pre
    }

    pub fn t_post(&self) -> f64 {
        self.beta_post / self.se_post
    }

    pub fn diff_test(&self) -> DiffTest {
        DiffTest {
            diff: self.diff,
            diff_se: self.diff_se,
            diff_t: self.diff_t,
            diff_p: self.diff_p,
        }
    }
}

pub fn fit(panel: &Panel, covariance: Covariance) -> Result<FitResult, RegressError> {
    fit_observations(
        &panel.observations,
        panel.mode,
        panel.polarity,
        panel.w,
        covariance,
    )
}

pub fn fit_observations(
    obs: &[Observation],
    mode: Mode,
    polarity: Polarity,
    w: u32,
    covariance: Covariance,
) -> Result<FitResult, RegressError> {
    let d = within_transform(obs)?;
    let f = ols(&d, covariance)?;
    let dt = diff_test(
        f.beta[0],
        f.beta[1],
        f.cov[0][0],
        f.cov[1][1],
        f.cov[0][1],
        f.dof,
    )?;
    Ok(FitResult {
        mode,
        polarity,
        w,
        beta_pre: f.beta[0],
        beta_post: f.beta[1],
        beta_x: f.beta[2],
        se_pre: f.se(0),
        se_post: f.se(1),
        se_x: f.se(2),
        cov_prepost: f.cov[0][1],
        n_obs: f.n_obs,
        n_sectors: f.n_absorbed,
        dof: f.dof,
        rss: f.rss,
        diff: dt.diff,
        diff_se: dt.diff_se,
        diff_t: dt.diff_t,
        diff_p: dt.diff_p,
        covariance,
    })
}

/// Fit export, one row per fit in the given order.
pub fn fits_csv(fits: &[FitResult]) -> String {
    let mut out = String::from(FIT_HEADER);
    out.push('\n');
    for f in fits {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f.mode,
            f.polarity,
            f.w,
            f.beta_pre,
            f.se_pre,
            f.beta_post,
            f.se_post,
            f.beta_x,
            f.se_x,
            f.diff,
            f.diff_se,
            f.diff_t,
            f.diff_p,
            f.n_obs
        );
    }
    out
}
