//! Greedy forward selection by the sum of squared canonical correlations.
//!
//! Three engines compute the same criterion:
//!
//! * `HCorrelation` works on the centred data. Responses are orthogonalised
//!   once into `V`; every candidate is kept orthogonal to the selected basis
//!   `W_s`, and its gain is the sum over `j` of the squared correlation
//!   between the candidate residual and `v_j`.
//! * `ThetaAngle` does the same in the coordinates of an orthonormal basis of
//!   `(X_C, Y_C)`, so vectors have length `n + m` instead of `N`. The gain is
//!   the sum of squared cosines between the residual and each `v_j`.
//! * `Definition` recomputes the canonical correlations of
//!   `(X_s, x_i)` against `Y` for every candidate. It is the slow reference.
//!
//! Because the residuals are orthogonal to `W_s` and `V` is orthogonal, the
//! criterion of `(X_s, x_i)` splits into the criterion of `X_s` plus the gain
//! of the residual alone, so only the gain needs computing per candidate.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::ssc_values;
use crate::dataset::EncodedDataset;
use crate::error::{Error, Result};
use crate::matrix::{
    center_values, gram_schmidt, hconcat, orthogonalize_against, FactoredBasis, OrthonormalBasis,
    RANK_TOL,
};

/// Residual ratio after a rank-one update that triggers a full
/// re-orthogonalisation of a candidate against `W_s`.
const REORTH_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    #[serde(rename = "h")]
    HCorrelation,
    #[serde(rename = "theta")]
    ThetaAngle,
    #[serde(rename = "definition")]
    Definition,
}

impl Mode {
    /// The faster fast path for the given shape: coordinates pay off once
    /// there are more instances than features plus responses.
    pub fn auto(n_instances: usize, n_features: usize, n_responses: usize) -> Mode {
        if n_instances > n_features + n_responses {
            Mode::ThetaAngle
        } else {
            Mode::HCorrelation
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Mode::HCorrelation => "h",
            Mode::ThetaAngle => "theta",
            Mode::Definition => "definition",
        }
    }

    pub const ALL: [Mode; 3] = [Mode::Definition, Mode::HCorrelation, Mode::ThetaAngle];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" | "h-correlation" | "h_correlation" => Ok(Mode::HCorrelation),
            "theta" | "theta-angle" | "theta_angle" => Ok(Mode::ThetaAngle),
            "definition" | "def" => Ok(Mode::Definition),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Score of one remaining candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateScore {
    /// Original feature index.
    pub index: usize,
    /// Criterion gain if this candidate is selected next.
    pub increment: f64,
    /// The candidate lies in the span of the selected features.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionBreakdown {
    /// In the order of the remaining candidates (ascending original index).
    pub candidates: Vec<CandidateScore>,
    /// Per-pair terms, one row per candidate and one column per `v_j`.
    /// Absent for the definition engine.
    pub terms: Option<DMatrix<f64>>,
}

impl CriterionBreakdown {
    /// Highest non-degenerate gain; ties go to the lowest original index.
    pub fn best(&self) -> Option<CandidateScore> {
        self.candidates.iter().filter(|c| !c.degenerate).fold(
            None,
            |best: Option<CandidateScore>, c| match best {
                Some(b)
                    if b.increment > c.increment
                        || (b.increment == c.increment && b.index < c.index) =>
                {
                    Some(b)
                }
                _ => Some(*c),
            },
        )
    }
}

#[derive(Debug, Clone)]
struct FastEngine {
    fx: DMatrix<f64>,
    fy: DMatrix<f64>,
    basis: Option<FactoredBasis>,
    v: Vec<DVector<f64>>,
    v_norm_sq: Vec<f64>,
    ws: Vec<DVector<f64>>,
    /// Aligned with `SelectionState::remaining`.
    wr: Vec<DVector<f64>>,
    /// `|f_i|` per original feature, the scale for degeneracy tests.
    f_norms: Vec<f64>,
}

#[derive(Debug, Clone)]
struct DefinitionEngine {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

#[derive(Debug, Clone)]
enum Engine {
    Fast(Box<FastEngine>),
    Definition(DefinitionEngine),
}

/// Working state of a greedy run between iterations.
#[derive(Debug, Clone)]
pub struct SelectionState {
    mode: Mode,
    selected: Vec<usize>,
    remaining: Vec<usize>,
    criterion_total: f64,
    engine: Engine,
}

/// One completed iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionStep {
    /// 1-based.
    pub iteration: usize,
    pub index: usize,
    pub name: String,
    pub increment: f64,
    pub cumulative_ssc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub mode: Mode,
    #[serde(rename = "N")]
    pub n_instances: usize,
    pub n: usize,
    pub m: usize,
    pub selections: Vec<SelectionStep>,
    /// Wall-clock seconds per iteration; the first includes initialisation.
    #[serde(skip)]
    pub iteration_seconds: Vec<f64>,
}

impl SelectionReport {
    pub fn indices(&self) -> Vec<usize> {
        self.selections.iter().map(|s| s.index).collect()
    }

    pub fn increments(&self) -> Vec<f64> {
        self.selections.iter().map(|s| s.increment).collect()
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.selections.iter().map(|s| s.cumulative_ssc).collect()
    }

    pub fn final_ssc(&self) -> f64 {
        self.selections.last().map_or(0.0, |s| s.cumulative_ssc)
    }

    pub fn cumulative_seconds(&self) -> Vec<f64> {
        self.iteration_seconds
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect()
    }
}

impl SelectionState {
    /// Centres the data, picks the engine and builds the response basis.
    pub fn init(data: &EncodedDataset, mode_override: Option<Mode>) -> Result<Self> {
        let (n_instances, n) = data.x.values().shape();
        let m = data.y.ncols();
        if n_instances < 2 {
            return Err(Error::InvalidArgument(format!(
                "at least two instances are required, got {n_instances}"
            )));
        }
        let xc = center_values(data.x.values()).into_values();
        if xc.iter().all(|v| *v == 0.0) {
            return Err(Error::degenerate(
                "dataset",
                "every feature column is constant",
            ));
        }
        let yc = center_values(data.y.values()).into_values();
        let mode = mode_override.unwrap_or_else(|| Mode::auto(n_instances, n, m));

        let engine = match mode {
            Mode::Definition => {
                response_basis(&yc)?;
                Engine::Definition(DefinitionEngine {
                    x: data.x.values().clone(),
                    y: data.y.values().clone(),
                })
            }
            Mode::HCorrelation => Engine::Fast(Box::new(FastEngine::new(xc, yc, None)?)),
            Mode::ThetaAngle => {
                if n_instances < n + m {
                    return Err(Error::Dimension(format!(
                        "coordinate engine needs N >= n + m, got N = {n_instances}, n + m = {}",
                        n + m
                    )));
                }
                let u = FactoredBasis::new(&hconcat(&xc, &yc))?;
                let fx = u.coordinates().columns(0, n).into_owned();
                let fy = u.coordinates().columns(n, m).into_owned();
                Engine::Fast(Box::new(FastEngine::new(fx, fy, Some(u))?))
            }
        };
        Ok(Self {
            mode,
            selected: Vec::new(),
            remaining: (0..n).collect(),
            criterion_total: 0.0,
            engine,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn remaining(&self) -> &[usize] {
        &self.remaining
    }

    pub fn criterion_total(&self) -> f64 {
        self.criterion_total
    }

    /// Working feature matrix `F_X` (coordinates or centred data).
    pub fn fx(&self) -> Option<&DMatrix<f64>> {
        self.fast().map(|e| &e.fx)
    }

    pub fn fy(&self) -> Option<&DMatrix<f64>> {
        self.fast().map(|e| &e.fy)
    }

    /// Basis `U` of the coordinate engine.
    pub fn basis(&self) -> Option<&OrthonormalBasis> {
        self.fast()
            .and_then(|e| e.basis.as_ref())
            .map(FactoredBasis::basis)
    }

    pub fn response_basis(&self) -> Option<&[DVector<f64>]> {
        self.fast().map(|e| e.v.as_slice())
    }

    pub fn selected_basis(&self) -> Option<&[DVector<f64>]> {
        self.fast().map(|e| e.ws.as_slice())
    }

    /// Candidates orthogonalised against the selected basis, aligned with
    /// [`remaining`](Self::remaining).
    pub fn candidate_residuals(&self) -> Option<&[DVector<f64>]> {
        self.fast().map(|e| e.wr.as_slice())
    }

    fn fast(&self) -> Option<&FastEngine> {
        match &self.engine {
            Engine::Fast(e) => Some(e),
            Engine::Definition(_) => None,
        }
    }

    pub fn evaluate_candidates(&self) -> Result<CriterionBreakdown> {
        match &self.engine {
            Engine::Fast(e) => Ok(e.evaluate(&self.remaining)),
            Engine::Definition(e) => {
                e.evaluate(&self.selected, &self.remaining, self.criterion_total)
            }
        }
    }

    /// Moves the best candidate into the selected set and returns it.
    pub fn select_next(&mut self) -> Result<CandidateScore> {
        if self.remaining.is_empty() {
            return Err(Error::NoInformativeCandidate {
                selected: self.selected.len(),
            });
        }
        let breakdown = self.evaluate_candidates()?;
        let best = breakdown.best().ok_or(Error::NoInformativeCandidate {
            selected: self.selected.len(),
        })?;
        let pos = self
            .remaining
            .iter()
            .position(|&i| i == best.index)
            .ok_or_else(|| Error::Consistency("chosen index is not a candidate".into()))?;
        self.remaining.remove(pos);
        self.selected.push(best.index);
        if let Engine::Fast(e) = &mut self.engine {
            e.accept(pos);
        }
        self.criterion_total += best.increment;
        Ok(best)
    }
}

/// Orthogonal basis of the centred responses; they must have full rank.
fn response_basis(yc: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let gs = gram_schmidt(yc);
    if let Some(j) = gs.degenerate.iter().position(|&d| d) {
        return Err(Error::degenerate(
            "responses",
            format!("centred response column {j} is zero or linearly dependent"),
        ));
    }
    Ok(gs.columns.column_iter().map(|c| c.into_owned()).collect())
}

impl FastEngine {
    fn new(fx: DMatrix<f64>, fy: DMatrix<f64>, basis: Option<FactoredBasis>) -> Result<Self> {
        let v = response_basis(&fy)?;
        let v_norm_sq = v.iter().map(|c| c.norm_squared()).collect();
        let wr: Vec<DVector<f64>> = fx.column_iter().map(|c| c.into_owned()).collect();
        let f_norms = wr.iter().map(|c| c.norm()).collect();
        Ok(Self {
            fx,
            fy,
            basis,
            v,
            v_norm_sq,
            ws: Vec::new(),
            wr,
            f_norms,
        })
    }

    fn evaluate(&self, remaining: &[usize]) -> CriterionBreakdown {
        let m = self.v.len();
        let rows: Vec<(CandidateScore, Vec<f64>)> = self
            .wr
            .par_iter()
            .zip(remaining.par_iter())
            .map(|(w, &index)| {
                let w_sq = w.norm_squared();
                let degenerate = w_sq.sqrt() <= RANK_TOL * self.f_norms[index];
                let terms: Vec<f64> = if degenerate {
                    vec![0.0; m]
                } else {
                    self.v
                        .iter()
                        .zip(&self.v_norm_sq)
                        .map(|(v, v_sq)| {
                            let d = w.dot(v);
                            d * d / (w_sq * v_sq)
                        })
                        .collect()
                };
                let score = CandidateScore {
                    index,
                    increment: terms.iter().sum(),
                    degenerate,
                };
                (score, terms)
            })
            .collect();
        let terms = DMatrix::from_fn(rows.len(), m, |i, j| rows[i].1[j]);
        CriterionBreakdown {
            candidates: rows.into_iter().map(|(s, _)| s).collect(),
            terms: Some(terms),
        }
    }

    /// Appends residual `pos` to `W_s` and orthogonalises the other
    /// residuals against it.
    fn accept(&mut self, pos: usize) {
        let chosen = self.wr.remove(pos);
        let chosen_sq = chosen.norm_squared();
        self.ws.push(chosen);
        let ws_all = &self.ws;
        let new = &ws_all[ws_all.len() - 1];
        self.wr.par_iter_mut().for_each(|w| {
            let before = w.norm();
            let coeff = w.dot(new) / chosen_sq;
            w.axpy(-coeff, new, 1.0);
            if w.norm() < REORTH_RATIO * before {
                *w = orthogonalize_against(w, ws_all).vector;
            }
        });
    }
}

impl DefinitionEngine {
    fn evaluate(
        &self,
        selected: &[usize],
        remaining: &[usize],
        base: f64,
    ) -> Result<CriterionBreakdown> {
        let candidates = remaining
            .par_iter()
            .map(|&index| {
                let cols: Vec<usize> = selected
                    .iter()
                    .copied()
                    .chain(std::iter::once(index))
                    .collect();
                let xs = self.x.select_columns(cols.iter());
                match ssc_values(&xs, &self.y) {
                    Ok(total) => Ok(CandidateScore {
                        index,
                        increment: total - base,
                        degenerate: false,
                    }),
                    Err(Error::Degenerate { .. }) => Ok(CandidateScore {
                        index,
                        increment: 0.0,
                        degenerate: true,
                    }),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CriterionBreakdown {
            candidates,
            terms: None,
        })
    }
}

/// Selects `t` features greedily.
pub fn run(
    data: &EncodedDataset,
    t: usize,
    mode_override: Option<Mode>,
) -> Result<SelectionReport> {
    let n = data.n_features();
    if t > n {
        return Err(Error::TooManyFeatures { t, n });
    }
    if t == 0 {
        return Err(Error::InvalidArgument("t must be at least 1".into()));
    }
    let start = Instant::now();
    let mut state = SelectionState::init(data, mode_override)?;
    let mut selections = Vec::with_capacity(t);
    let mut iteration_seconds = Vec::with_capacity(t);
    let mut last = start;
    for iteration in 1..=t {
        let chosen = state.select_next()?;
        let now = Instant::now();
        iteration_seconds.push(now.duration_since(last).as_secs_f64());
        last = now;
        selections.push(SelectionStep {
            iteration,
            index: chosen.index,
            name: data.x.col_names()[chosen.index].clone(),
            increment: chosen.increment,
            cumulative_ssc: state.criterion_total(),
        });
    }
    Ok(SelectionReport {
        mode: state.mode(),
        n_instances: data.n_instances(),
        n,
        m: data.n_responses(),
        selections,
        iteration_seconds,
    })
}
