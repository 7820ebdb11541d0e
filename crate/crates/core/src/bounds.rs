//! Competitive-ratio bounds as exact functions of `x = alpha^2`.
//!
//! Every bound is a rational function of `x` on each of its pieces, so the
//! values are exact [`Rational`]s. Piece thresholds that are irrational in
//! `x` (such as `x = sqrt(2)` or `x = (1 + sqrt(17)) / 4`) are decided by
//! squaring, never by floating point.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("alpha^2 must be at least 1, got {0}")]
    AlphaBelowOne(Rational),
    #[error("need at least 2 machines, got {0}")]
    TooFewMachines(usize),
    #[error("unknown formula id `{0}`")]
    UnknownFormula(String),
}

/// Squared prediction error; always `>= 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Rational", into = "Rational")]
pub struct AlphaSquared(Rational);

impl AlphaSquared {
    pub fn new(x: Rational) -> Result<Self, BoundsError> {
        if x < Rational::one() {
            return Err(BoundsError::AlphaBelowOne(x));
        }
        Ok(AlphaSquared(x))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn one() -> Self {
        AlphaSquared(Rational::one())
    }
}

impl TryFrom<Rational> for AlphaSquared {
    type Error = BoundsError;
    fn try_from(x: Rational) -> Result<Self, BoundsError> {
        AlphaSquared::new(x)
    }
}

impl From<AlphaSquared> for Rational {
    fn from(x: AlphaSquared) -> Rational {
        x.0
    }
}

impl fmt::Display for AlphaSquared {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Every bound the crate can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    /// Lower bound for any non-preemptive algorithm.
    #[serde(rename = "thm1")]
    LbNonpreemptive,
    /// LPPT upper bound `f_n` for general `m`.
    #[serde(rename = "thm2")]
    UbLpptGeneral,
    /// Tight LPPT ratio `f_2` on two machines.
    #[serde(rename = "thm3")]
    LpptTwoMachines,
    /// Tight LPPT ratio `f_3` on three machines.
    #[serde(rename = "thm4")]
    LpptThreeMachines,
    /// Lower bound for any preemptive algorithm.
    #[serde(rename = "thm5")]
    LbPreemptive,
    /// PPRR upper bound.
    #[serde(rename = "thm6")]
    UbPprr,
    #[serde(rename = "prior-lb-nonpre")]
    PriorLbNonpreemptive,
    #[serde(rename = "prior-ub-lppt")]
    PriorUbLppt,
    #[serde(rename = "prior-lb-pre")]
    PriorLbPreemptive,
    /// Evaluates below 1 for `x > 1`; kept verbatim and never used in checks.
    #[serde(rename = "prior-ub-pprr")]
    PriorUbPprr,
}

impl Formula {
    pub const ALL: [Formula; 10] = [
        Formula::LbNonpreemptive,
        Formula::UbLpptGeneral,
        Formula::LpptTwoMachines,
        Formula::LpptThreeMachines,
        Formula::LbPreemptive,
        Formula::UbPprr,
        Formula::PriorLbNonpreemptive,
        Formula::PriorUbLppt,
        Formula::PriorLbPreemptive,
        Formula::PriorUbPprr,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Formula::LbNonpreemptive => "thm1",
            Formula::UbLpptGeneral => "thm2",
            Formula::LpptTwoMachines => "thm3",
            Formula::LpptThreeMachines => "thm4",
            Formula::LbPreemptive => "thm5",
            Formula::UbPprr => "thm6",
            Formula::PriorLbNonpreemptive => "prior-lb-nonpre",
            Formula::PriorUbLppt => "prior-ub-lppt",
            Formula::PriorLbPreemptive => "prior-lb-pre",
            Formula::PriorUbPprr => "prior-ub-pprr",
        }
    }

    pub fn is_anomalous(self) -> bool {
        self == Formula::PriorUbPprr
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Formula {
    type Err = BoundsError;
    fn from_str(s: &str) -> Result<Self, BoundsError> {
        Formula::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| BoundsError::UnknownFormula(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    pub formula: Formula,
    /// Active piece (or attaining term) of the formula.
    pub piece: String,
    pub value: Rational,
    /// Set for the prior PPRR bound, which drops below 1 for `x > 1` and so is not a valid ratio.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub anomalous: bool,
}

impl BoundEvaluation {
    fn new(formula: Formula, piece: impl Into<String>, value: Rational) -> Self {
        BoundEvaluation {
            formula,
            piece: piece.into(),
            value,
            anomalous: formula.is_anomalous(),
        }
    }
}

/// A piece boundary `x = (offset + sqrt(radicand)) * scale`, or a rational point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Threshold {
    Exact(Rational),
    Surd {
        offset: Rational,
        radicand: Rational,
        scale: Rational,
    },
}

impl Threshold {
    fn sqrt_of(radicand: i64) -> Self {
        Threshold::Surd {
            offset: Rational::zero(),
            radicand: Rational::from(radicand),
            scale: Rational::one(),
        }
    }

    /// Exact comparison of `x` against the threshold.
    pub fn compare(&self, x: &Rational) -> Ordering {
        match self {
            Threshold::Exact(t) => x.cmp(t),
            Threshold::Surd {
                offset,
                radicand,
                scale,
            } => {
                // scale > 0, so x ? (o + sqrt r) s  <=>  x/s - o ? sqrt r.
                let y = x / scale - offset;
                if y.is_negative() {
                    Ordering::Less
                } else {
                    y.square().cmp(radicand)
                }
            }
        }
    }

    /// Rational value within `10^-digits` of the threshold.
    pub fn approx(&self, digits: u32) -> Rational {
        match self {
            Threshold::Exact(t) => t.clone(),
            Threshold::Surd {
                offset,
                radicand,
                scale,
            } => (offset + radicand.sqrt_approx(digits + 2)) * scale,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Threshold::Exact(_))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Exact(t) => write!(f, "x={t}"),
            Threshold::Surd {
                offset,
                radicand,
                scale,
            } => write!(f, "x=({offset}+sqrt({radicand}))*{scale}"),
        }
    }
}

type PieceFn = fn(&Rational, &Rational) -> Rational;

/// One branch of a piecewise bound, active up to `upper` (the last piece has none).
#[derive(Clone)]
pub struct Piece {
    pub label: &'static str,
    pub eval: PieceFn,
    /// `(threshold, closed)`: active while `x <= t` if closed, `x < t` otherwise.
    pub upper: Option<(Threshold, bool)>,
}

impl Piece {
    fn covers(&self, x: &Rational) -> bool {
        match &self.upper {
            None => true,
            Some((t, closed)) => match t.compare(x) {
                Ordering::Less => true,
                Ordering::Equal => *closed,
                Ordering::Greater => false,
            },
        }
    }
}

fn r(n: i64) -> Rational {
    Rational::from(n)
}

fn half_one_plus_x(_m: &Rational, x: &Rational) -> Rational {
    (r(1) + x) / r(2)
}

fn two_minus_inv_x(_m: &Rational, x: &Rational) -> Rational {
    r(2) - x.recip()
}

fn two_minus_inv_m(m: &Rational, _x: &Rational) -> Rational {
    r(2) - m.recip()
}

/// Pieces of the piecewise bounds (the non-preemptive lower bound and the
/// three LPPT guarantees), in increasing `x` order.
pub fn pieces(formula: Formula, m: usize) -> Option<Vec<Piece>> {
    let mr = Rational::from(m);
    let exact = |t: Rational, closed: bool| Some((Threshold::Exact(t), closed));
    let ps = match formula {
        Formula::LbNonpreemptive => vec![
            Piece {
                label: "(1+x)/2",
                eval: half_one_plus_x,
                upper: exact(r(2), true),
            },
            Piece {
                label: "2-1/x",
                eval: two_minus_inv_x,
                upper: exact(mr, false),
            },
            Piece {
                label: "2-1/m",
                eval: two_minus_inv_m,
                upper: None,
            },
        ],
        Formula::UbLpptGeneral => vec![
            Piece {
                label: "1+(m-1)x/(3m)",
                eval: |m, x| r(1) + (m - r(1)) * x / (r(3) * m),
                upper: exact(r(3) * &mr / (&mr + r(2)), true),
            },
            Piece {
                label: "(1+x)/2",
                eval: half_one_plus_x,
                upper: exact((r(3) * &mr - r(2)) / &mr, true),
            },
            Piece {
                label: "2-1/m",
                eval: two_minus_inv_m,
                upper: None,
            },
        ],
        Formula::LpptTwoMachines => vec![
            Piece {
                label: "(4+3x)/(4+2x)",
                eval: |_, x| (r(4) + r(3) * x) / (r(4) + r(2) * x),
                upper: Some((Threshold::sqrt_of(2), false)),
            },
            Piece {
                label: "(1+x)/2",
                eval: half_one_plus_x,
                upper: exact(r(2), false),
            },
            Piece {
                label: "3/2",
                eval: |_, _| Rational::new(3, 2),
                upper: None,
            },
        ],
        Formula::LpptThreeMachines => vec![
            Piece {
                label: "(6+5x)/(6+3x)",
                eval: |_, x| (r(6) + r(5) * x) / (r(6) + r(3) * x),
                upper: Some((
                    Threshold::Surd {
                        offset: r(1),
                        radicand: r(17),
                        scale: Rational::new(1, 4),
                    },
                    false,
                )),
            },
            Piece {
                label: "(5+2x)/6",
                eval: |_, x| (r(5) + r(2) * x) / r(6),
                upper: exact(Rational::new(3, 2), false),
            },
            Piece {
                label: "(3+2x)/(3+x)",
                eval: |_, x| (r(3) + r(2) * x) / (r(3) + x),
                upper: Some((Threshold::sqrt_of(3), false)),
            },
            Piece {
                label: "(1+x)/2",
                eval: half_one_plus_x,
                upper: exact(r(2), false),
            },
            Piece {
                label: "2-1/x",
                eval: two_minus_inv_x,
                upper: exact(r(3), false),
            },
            Piece {
                label: "5/3",
                eval: |_, _| Rational::new(5, 3),
                upper: None,
            },
        ],
        _ => return None,
    };
    Some(ps)
}

fn eval_pieces(formula: Formula, m: usize, x: &AlphaSquared) -> BoundEvaluation {
    let ps = pieces(formula, m).expect("piecewise formula");
    let mr = Rational::from(m);
    let piece = ps
        .iter()
        .find(|p| p.covers(x.value()))
        .expect("last piece is unbounded");
    BoundEvaluation::new(formula, piece.label, (piece.eval)(&mr, x.value()))
}

/// Lower bound on the competitive ratio of any non-preemptive algorithm.
pub fn lb_nonpreemptive(m: usize, x: &AlphaSquared) -> BoundEvaluation {
    eval_pieces(Formula::LbNonpreemptive, m, x)
}

/// LPPT upper bound `f_n(m, x)`.
pub fn ub_lppt_general(m: usize, x: &AlphaSquared) -> BoundEvaluation {
    eval_pieces(Formula::UbLpptGeneral, m, x)
}

/// Exact LPPT ratio `f_2(x)` on two machines.
pub fn ratio_lppt_m2(x: &AlphaSquared) -> BoundEvaluation {
    eval_pieces(Formula::LpptTwoMachines, 2, x)
}

/// Exact LPPT ratio `f_3(x)` on three machines.
pub fn ratio_lppt_m3(x: &AlphaSquared) -> BoundEvaluation {
    eval_pieces(Formula::LpptThreeMachines, 3, x)
}

/// Tightest LPPT guarantee available for `m` machines.
pub fn lppt_bound(m: usize, x: &AlphaSquared) -> BoundEvaluation {
    match m {
        2 => ratio_lppt_m2(x),
        3 => ratio_lppt_m3(x),
        _ => ub_lppt_general(m, x),
    }
}

/// Lower bound on the competitive ratio of any preemptive algorithm: the
/// larger of a term in `floor((m-1)x)` and a term in `ceil((m-1)x)`.
pub fn lb_preemptive(m: usize, x: &AlphaSquared) -> BoundEvaluation {
    let mr = Rational::from(m);
    let x = x.value();
    let spread = (&mr - r(1)) * x;
    let fl = Rational::from(spread.floor());
    let ce = Rational::from(spread.ceil());
    let floor_term = r(2) - mr.recip() + (mr.recip() - r(1)) * (&mr - r(1)) / &fl;
    let ceil_term = (&ce + &mr * x - &mr + r(1)) / (x + &ce);
    let (label, value) = match floor_term.cmp(&ceil_term) {
        Ordering::Greater => ("floor-term", floor_term),
        Ordering::Less => ("ceil-term", ceil_term),
        Ordering::Equal => ("both", floor_term),
    };
    BoundEvaluation::new(Formula::LbPreemptive, label, value)
}

/// PPRR upper bound `2 - 1/m - (m-1)/(m x)`.
pub fn ub_pprr(m: usize, x: &AlphaSquared) -> BoundEvaluation {
    let mr = Rational::from(m);
    let value = r(2) - mr.recip() - (&mr - r(1)) / (&mr * x.value());
    BoundEvaluation::new(Formula::UbPprr, "2-1/m-(m-1)/(mx)", value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PriorKind {
    LbNonpre,
    UbLppt,
    LbPre,
    UbPprr,
}

impl PriorKind {
    pub fn formula(self) -> Formula {
        match self {
            PriorKind::LbNonpre => Formula::PriorLbNonpreemptive,
            PriorKind::UbLppt => Formula::PriorUbLppt,
            PriorKind::LbPre => Formula::PriorLbPreemptive,
            PriorKind::UbPprr => Formula::PriorUbPprr,
        }
    }
}

/// Bounds from prior work, evaluated verbatim.
pub fn prior_bounds(kind: PriorKind, m: usize, x: &AlphaSquared) -> BoundEvaluation {
    let mr = Rational::from(m);
    let x = x.value();
    let formula = kind.formula();
    match kind {
        PriorKind::LbNonpre => {
            if *x <= r(2) {
                BoundEvaluation::new(formula, "(1+x)/2", (r(1) + x) / r(2))
            } else {
                let fx = Rational::from(x.floor());
                let inner = Rational::from((&fx * (&mr - r(1)) / &mr).floor());
                BoundEvaluation::new(formula, "1+floor(floor(x)(m-1)/m)/floor(x)", r(1) + inner / fx)
            }
        }
        PriorKind::UbLppt => {
            let terms = [
                ("(2+2x)/2", (r(2) + r(2) * x) / r(2)),
                ("1+(x/2)(1-1/m)", r(1) + x / r(2) * (r(1) - mr.recip())),
                ("2-1/m", r(2) - mr.recip()),
            ];
            let (label, value) = terms
                .into_iter()
                .reduce(|best, t| if t.1 < best.1 { t } else { best })
                .expect("three terms");
            BoundEvaluation::new(formula, label, value)
        }
        PriorKind::LbPre => {
            let general = ("2-1/x-1/m", r(2) - x.recip() - mr.recip());
            let piece = if *x <= r(2) {
                ("(xm+m-1)/(x+2(m-1))", (x * &mr + &mr - r(1)) / (x + r(2) * (&mr - r(1))))
            } else {
                let fx = Rational::from(x.floor());
                (
                    "2-1/m-(m-1)/(m*floor(x))",
                    r(2) - mr.recip() - (&mr - r(1)) / (&mr * fx),
                )
            };
            let (label, value) = if general.1 > piece.1 { general } else { piece };
            BoundEvaluation::new(formula, label, value)
        }
        PriorKind::UbPprr => {
            let value = r(2) - (x * &mr + &mr - r(2)) / (x * &mr - r(1));
            BoundEvaluation::new(formula, "verbatim (anomalous)", value)
        }
    }
}

/// Evaluates any formula by id. `m` is ignored by the two- and three-machine ratios.
pub fn evaluate(formula: Formula, m: usize, x: &AlphaSquared) -> Result<BoundEvaluation, BoundsError> {
    if m < 2 {
        return Err(BoundsError::TooFewMachines(m));
    }
    Ok(match formula {
        Formula::LbNonpreemptive => lb_nonpreemptive(m, x),
        Formula::UbLpptGeneral => ub_lppt_general(m, x),
        Formula::LpptTwoMachines => ratio_lppt_m2(x),
        Formula::LpptThreeMachines => ratio_lppt_m3(x),
        Formula::LbPreemptive => lb_preemptive(m, x),
        Formula::UbPprr => ub_pprr(m, x),
        Formula::PriorLbNonpreemptive => prior_bounds(PriorKind::LbNonpre, m, x),
        Formula::PriorUbLppt => prior_bounds(PriorKind::UbLppt, m, x),
        Formula::PriorLbPreemptive => prior_bounds(PriorKind::LbPre, m, x),
        Formula::PriorUbPprr => prior_bounds(PriorKind::UbPprr, m, x),
    })
}

/// Difference between adjacent pieces at one breakpoint.
#[derive(Debug, Clone)]
pub struct BreakpointGap {
    pub threshold: Threshold,
    pub left: &'static str,
    pub right: &'static str,
    /// `|left(t) - right(t)|`, exact at rational breakpoints and evaluated at
    /// a `digits`-digit rational approximation of algebraic ones.
    pub gap: Rational,
}

impl BreakpointGap {
    pub fn is_exact(&self) -> bool {
        self.threshold.is_exact()
    }
}

pub fn breakpoint_gaps(formula: Formula, m: usize, digits: u32) -> Vec<BreakpointGap> {
    let Some(ps) = pieces(formula, m) else {
        return Vec::new();
    };
    let mr = Rational::from(m);
    ps.windows(2)
        .map(|w| {
            let (t, _) = w[0].upper.clone().expect("only the last piece is unbounded");
            let at = t.approx(digits);
            let gap = ((w[0].eval)(&mr, &at) - (w[1].eval)(&mr, &at)).abs();
            BreakpointGap {
                threshold: t,
                left: w[0].label,
                right: w[1].label,
                gap,
            }
        })
        .collect()
}

/// Points `start, start + step, ...` up to and including `stop`.
pub fn rational_grid(start: &Rational, stop: &Rational, step: &Rational) -> Vec<Rational> {
    assert!(step.is_positive(), "grid step must be positive");
    let mut out = Vec::new();
    let mut x = start.clone();
    while x <= *stop {
        out.push(x.clone());
        x += step;
    }
    out
}
