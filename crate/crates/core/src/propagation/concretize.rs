use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Ball0Spec, BoxDomain};
use crate::scalar::{CompensatedSum, Scalar};

/// A linear function `coeffs . x + bias` over some layer's neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr<T> {
    pub coeffs: Vec<T>,
    pub bias: T,
}

impl<T: Scalar> AffineExpr<T> {
    pub fn new(coeffs: Vec<T>, bias: T) -> Self {
        Self { coeffs, bias }
    }

    pub fn constant(width: usize, bias: T) -> Self {
        Self {
            coeffs: vec![T::zero(); width],
            bias,
        }
    }

    /// The expression selecting neuron `index`.
    pub fn unit(width: usize, index: usize) -> Self {
        let mut e = Self::constant(width, T::zero());
        e.coeffs[index] = T::one();
        e
    }

    pub fn width(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.coeffs
            .iter()
            .zip(x)
            .fold(self.bias.clone(), |acc, (w, v)| acc + w.clone() * v.clone())
    }
}

/// A closed interval `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lower: T, upper: T) -> Self {
        Self { lower, upper }
    }

    pub fn contains(&self, v: &T) -> bool {
        self.lower <= *v && *v <= self.upper
    }

    pub fn width(&self) -> T {
        self.upper.clone() - self.lower.clone()
    }
}

/// How far a single perturbable entry can move the expression, in each direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution<T> {
    pub entry: usize,
    /// Most negative change, always `<= 0`.
    pub minus: T,
    /// Most positive change, always `>= 0`.
    pub plus: T,
}

/// The expression value at the center plus the per-entry contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Contributions<T> {
    /// `bias + coeffs . center`; entries outside the perturbable set only appear here.
    pub base: T,
    pub items: Vec<Contribution<T>>,
}

/// Which set the input-layer expression is minimised and maximised over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// The box of all perturbable entries.
    Box,
    /// The l0-ball itself (sum of the `t` extreme contributions).
    TopT,
    /// The scaled l1-ball (`t` times the single extreme contribution).
    TTimesTop,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Box, Strategy::TopT, Strategy::TTimesTop];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Box => "box",
            Strategy::TopT => "topt",
            Strategy::TTimesTop => "ttimestop",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "box" => Ok(Strategy::Box),
            "topt" | "top-t" => Ok(Strategy::TopT),
            "ttimestop" | "t-times-top" => Ok(Strategy::TTimesTop),
            _ => Err(Error::InvalidArgument(format!(
                "unknown strategy `{s}`, expected box, topt or ttimestop"
            ))),
        }
    }
}

fn check_expr<T: Scalar>(expr: &AffineExpr<T>, domain: &BoxDomain<T>) -> Result<()> {
    if expr.width() != domain.dim() {
        return Err(Error::ShapeMismatch {
            expected: domain.dim(),
            found: expr.width(),
        });
    }
    Ok(())
}

fn cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Extreme changes of `w (y - c)` for `y` in `[a, b]`, as `(minus, plus)`.
fn channel_range<T: Scalar>(w: &T, c: &T, a: &T, b: &T) -> (T, T) {
    let up = w.clone() * (b.clone() - c.clone());
    let down = w.clone() * (a.clone() - c.clone());
    if up < down {
        (up, down)
    } else {
        (down, up)
    }
}

/// Per-entry contributions of an input-layer expression. Channels of one
/// entry move together, so their contributions are summed.
pub fn contributions<T: Scalar>(
    expr: &AffineExpr<T>,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
) -> Result<Contributions<T>> {
    check_expr(expr, domain)?;
    let center = spec.center();
    let mut base = CompensatedSum::default();
    base.add(expr.bias.clone());
    for (w, c) in expr.coeffs.iter().zip(center) {
        base.add(w.clone() * c.clone());
    }
    let items = spec
        .perturbable()
        .iter()
        .map(|&entry| {
            let mut minus = T::zero();
            let mut plus = T::zero();
            for i in domain.entry_range(entry) {
                let (lo, hi) = channel_range(
                    &expr.coeffs[i],
                    &center[i],
                    &domain.lower()[i],
                    &domain.upper()[i],
                );
                minus += lo;
                plus += hi;
            }
            Contribution { entry, minus, plus }
        })
        .collect();
    Ok(Contributions {
        base: base.value(),
        items,
    })
}

fn sum<T: Scalar>(base: T, values: impl IntoIterator<Item = T>) -> T {
    let mut s = CompensatedSum::default();
    s.add(base);
    for v in values {
        s.add(v);
    }
    s.value()
}

/// Interval over the box of all perturbable entries.
pub fn concretize_box<T: Scalar>(
    expr: &AffineExpr<T>,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
) -> Result<Interval<T>> {
    let c = contributions(expr, spec, domain)?;
    Ok(box_from(&c))
}

fn box_from<T: Scalar>(c: &Contributions<T>) -> Interval<T> {
    Interval::new(
        sum(c.base.clone(), c.items.iter().map(|x| x.minus.clone())),
        sum(c.base.clone(), c.items.iter().map(|x| x.plus.clone())),
    )
}

/// Indices (into `items`) of the `t` smallest values under `key`, found by
/// partial selection and returned in ascending index order.
fn select_smallest<T: Scalar>(
    items: &[Contribution<T>],
    t: usize,
    key: impl Fn(&Contribution<T>) -> T,
) -> Vec<usize> {
    let t = t.min(items.len());
    let mut order: Vec<usize> = (0..items.len()).collect();
    if t == 0 {
        return Vec::new();
    }
    if t < order.len() {
        order.select_nth_unstable_by(t - 1, |&i, &j| {
            cmp(&key(&items[i]), &key(&items[j])).then(i.cmp(&j))
        });
        order.truncate(t);
    }
    order.sort_unstable();
    order
}

fn topt_from<T: Scalar>(c: &Contributions<T>, t: usize) -> Interval<T> {
    let low = select_smallest(&c.items, t, |x| x.minus.clone());
    let high = select_smallest(&c.items, t, |x| -x.plus.clone());
    Interval::new(
        sum(
            c.base.clone(),
            low.iter().map(|&i| c.items[i].minus.clone()),
        ),
        sum(
            c.base.clone(),
            high.iter().map(|&i| c.items[i].plus.clone()),
        ),
    )
}

/// Exact extremes over the l0-ball: the center value plus the `t` most
/// negative (resp. positive) contributions.
pub fn concretize_topt<T: Scalar>(
    expr: &AffineExpr<T>,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
) -> Result<Interval<T>> {
    let c = contributions(expr, spec, domain)?;
    Ok(topt_from(&c, spec.radius()))
}

fn ttimestop_from<T: Scalar>(c: &Contributions<T>, t: usize) -> Interval<T> {
    let t = T::from_count(t);
    let min = c
        .items
        .iter()
        .map(|x| x.minus.clone())
        .min_by(cmp)
        .unwrap_or_else(T::zero);
    let max = c
        .items
        .iter()
        .map(|x| x.plus.clone())
        .max_by(cmp)
        .unwrap_or_else(T::zero);
    Interval::new(c.base.clone() + t.clone() * min, c.base.clone() + t * max)
}

/// Extremes over the scaled l1-ball: `t` times the single largest contribution.
pub fn concretize_ttimestop<T: Scalar>(
    expr: &AffineExpr<T>,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
) -> Result<Interval<T>> {
    let c = contributions(expr, spec, domain)?;
    Ok(ttimestop_from(&c, spec.radius()))
}

/// Concretises with the given strategy.
pub fn concretize<T: Scalar>(
    expr: &AffineExpr<T>,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
    strategy: Strategy,
) -> Result<Interval<T>> {
    let c = contributions(expr, spec, domain)?;
    Ok(match strategy {
        Strategy::Box => box_from(&c),
        Strategy::TopT => topt_from(&c, spec.radius()),
        Strategy::TTimesTop => ttimestop_from(&c, spec.radius()),
    })
}

/// A point of the l0-ball minimising the expression.
pub fn argmin_in_ball0<T: Scalar>(
    expr: &AffineExpr<T>,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
) -> Result<Vec<T>> {
    let c = contributions(expr, spec, domain)?;
    let mut y = spec.center().to_vec();
    for i in select_smallest(&c.items, spec.radius(), |x| x.minus.clone()) {
        let item = &c.items[i];
        if item.minus.is_zero() {
            continue;
        }
        for j in domain.entry_range(item.entry) {
            let w = &expr.coeffs[j];
            if w.is_positive() {
                y[j] = domain.lower()[j].clone();
            } else if w.is_negative() {
                y[j] = domain.upper()[j].clone();
            }
        }
    }
    Ok(y)
}

/// A point of the l0-ball maximising the expression.
pub fn argmax_in_ball0<T: Scalar>(
    expr: &AffineExpr<T>,
    spec: &Ball0Spec<T>,
    domain: &BoxDomain<T>,
) -> Result<Vec<T>> {
    let neg = AffineExpr::new(
        expr.coeffs.iter().map(|w| -w.clone()).collect(),
        -expr.bias.clone(),
    );
    argmin_in_ball0(&neg, spec, domain)
}
