//! Exact-rational coefficient table behind the Ornstein-Uhlenbeck
//! perturbation series.
//!
//! The series polynomials decompose into a parameter-free, triply-indexed
//! rational sequence c_k^{(i,j)}. Orders one and two are fixed seed
//! values; higher orders follow a recursion that only ever divides by
//! small integers, so the whole table is built in exact arithmetic and
//! converted to floating point at assembly time.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::errors::Error;
use crate::Result;

/// Exact rational scalar; denominator kept positive and reduced.
pub type Rational = BigRational;

fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Index into the table: (series order i, polynomial power j, drift power k).
pub type Index = (usize, usize, usize);

/// Immutable table of the decomposition coefficients c_k^{(i,j)} for
/// 1 <= i <= max_order, 1 <= j <= 2i, 0 <= k <= min(2i - j, i), plus the
/// conventional unit entry at (0, 0, 0) that carries the zeroth-order
/// (Brownian) term through the assembly sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientTable {
    max_order: usize,
    entries: BTreeMap<Index, Rational>,
}

/// Largest order with a reasonable memory/latency footprint. The table
/// has ~3/2 i^2 entries per order with integer digits growing slowly, so
/// 10 keeps construction well under a second; the series itself stops
/// being useful long before that.
pub const PRACTICAL_MAX_ORDER: usize = 10;

impl CoefficientTable {
    /// Builds the complete table up to `max_order` (>= 1).
    pub fn build(max_order: usize) -> Result<Self> {
        if max_order == 0 {
            return Err(Error::domain("table order must be at least 1"));
        }
        let mut e: BTreeMap<Index, Rational> = BTreeMap::new();
        e.insert((0, 0, 0), Rational::one());

        // Order-one and order-two seeds.
        e.insert((1, 2, 0), rat(1, 2));
        e.insert((1, 1, 0), rat(1, 2));
        e.insert((1, 1, 1), rat(-1, 1));
        if max_order >= 2 {
            e.insert((2, 4, 0), rat(1, 8));
            e.insert((2, 3, 0), rat(1, 12));
            e.insert((2, 3, 1), rat(-1, 2));
            e.insert((2, 2, 0), rat(-1, 8));
            e.insert((2, 2, 1), rat(0, 1));
            e.insert((2, 2, 2), rat(1, 2));
            e.insert((2, 1, 0), rat(-1, 8));
            e.insert((2, 1, 1), rat(1, 2));
            e.insert((2, 1, 2), rat(-1, 2));
        }

        let get = |e: &BTreeMap<Index, Rational>, i: usize, j: usize, k: usize| -> Rational {
            e.get(&(i, j, k)).cloned().unwrap_or_else(Rational::zero)
        };

        for i in 3..=max_order {
            let ii = i as i64;
            // j = 2i
            let v = get(&e, i - 1, 2 * i - 2, 0) / rat(2 * ii, 1);
            e.insert((i, 2 * i, 0), v);
            // j = 2i - 1
            let v = get(&e, i - 1, 2 * i - 3, 0) / rat(2 * ii - 1, 1)
                - get(&e, i - 1, 2 * i - 2, 0) * rat(2 * ii - 3, 2 * (2 * ii - 1));
            e.insert((i, 2 * i - 1, 0), v);
            let v = (get(&e, i - 1, 2 * i - 3, 1) - get(&e, i - 1, 2 * i - 2, 0))
                / rat(2 * ii - 1, 1);
            e.insert((i, 2 * i - 1, 1), v);
            // 2 < j < 2i - 1, descending so (i, j + 1, .) is available.
            for j in (3..=(2 * i - 2)).rev() {
                let jj = j as i64;
                let kmax = (2 * i - j).min(i);
                let top = if j > i {
                    // kmax = 2i - j
                    (get(&e, i - 1, j - 2, 2 * i - j) - get(&e, i - 1, j - 1, 2 * i - j - 1))
                        / rat(jj, 1)
                } else if j == i {
                    -get(&e, i - 1, i - 1, i - 1) / rat(ii, 1)
                } else {
                    // j < i, kmax = i
                    get(&e, i, j + 1, i) * rat(jj + 1, 2) - get(&e, i - 1, j - 1, i - 1) / rat(jj, 1)
                        + get(&e, i - 1, j, i - 1)
                };
                e.insert((i, j, kmax), top);
                for k in 1..kmax {
                    let v = get(&e, i, j + 1, k) * rat(jj + 1, 2)
                        + get(&e, i - 1, j - 2, k) / rat(jj, 1)
                        - get(&e, i - 1, j - 1, k) * rat(jj - 1, jj)
                        - get(&e, i - 1, j - 1, k - 1) / rat(jj, 1)
                        + get(&e, i - 1, j, k - 1);
                    e.insert((i, j, k), v);
                }
                let v = get(&e, i, j + 1, 0) * rat(jj + 1, 2)
                    + get(&e, i - 1, j - 2, 0) / rat(jj, 1)
                    - get(&e, i - 1, j - 1, 0) * rat(jj - 1, jj);
                e.insert((i, j, 0), v);
            }
            // j = 2
            let v = get(&e, i, 3, i) * rat(3, 2) - get(&e, i - 1, 1, i - 1) / rat(2, 1)
                + get(&e, i - 1, 2, i - 1);
            e.insert((i, 2, i), v);
            for k in 1..i {
                let v = get(&e, i, 3, k) * rat(3, 2)
                    - get(&e, i - 1, 1, k) / rat(2, 1)
                    - get(&e, i - 1, 1, k - 1) / rat(2, 1)
                    + get(&e, i - 1, 2, k - 1);
                e.insert((i, 2, k), v);
            }
            let v = get(&e, i, 3, 0) * rat(3, 2) - get(&e, i - 1, 1, 0) / rat(2, 1);
            e.insert((i, 2, 0), v);
            // j = 1
            let v = get(&e, i, 2, i) + get(&e, i - 1, 1, i - 1);
            e.insert((i, 1, i), v);
            for k in 1..i {
                let v = get(&e, i, 2, k) + get(&e, i - 1, 1, k - 1);
                e.insert((i, 1, k), v);
            }
            let v = get(&e, i, 2, 0);
            e.insert((i, 1, 0), v);
        }

        let table = CoefficientTable {
            max_order,
            entries: e,
        };
        table.check_complete()?;
        Ok(table)
    }

    fn check_complete(&self) -> Result<()> {
        for (i, j, k) in admissible_indices(self.max_order) {
            if !self.entries.contains_key(&(i, j, k)) {
                return Err(Error::numerical(format!(
                    "coefficient table missing entry ({i},{j},{k})"
                )));
            }
        }
        Ok(())
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Coefficient at (i, j, k); errors outside the admissible index set.
    pub fn coefficient(&self, i: usize, j: usize, k: usize) -> Result<&Rational> {
        self.entries.get(&(i, j, k)).ok_or_else(|| {
            Error::domain(format!("coefficient index ({i},{j},{k}) outside the table"))
        })
    }

    /// Iterator over (index, value) in lexicographic index order.
    pub fn iter(&self) -> impl Iterator<Item = (&Index, &Rational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV rendering: header plus one `i,j,k,numerator,denominator` row
    /// per entry, sorted lexicographically by (i, j, k).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("i,j,k,numerator,denominator\n");
        for (&(i, j, k), v) in &self.entries {
            writeln!(out, "{i},{j},{k},{},{}", v.numer(), v.denom()).unwrap();
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }

    /// Parses the CSV format; fractions are reduced and sign-normalized
    /// on load, and the admissible index set must be exactly covered.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<Index, Rational> = BTreeMap::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "i,j,k,numerator,denominator" => {}
            Some((_, header)) => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("unexpected header {header:?}"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "empty file".into(),
                })
            }
        }
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 5 fields, found {}", fields.len()),
                });
            }
            let parse_usize = |s: &str, what: &str| -> Result<usize> {
                s.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad {what} {s:?}"),
                })
            };
            let i = parse_usize(fields[0], "order index")?;
            let j = parse_usize(fields[1], "power index")?;
            let k = parse_usize(fields[2], "drift index")?;
            let num: BigInt = fields[3].trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad numerator {:?}", fields[3]),
            })?;
            let den: BigInt = fields[4].trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad denominator {:?}", fields[4]),
            })?;
            if den.is_zero() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "zero denominator".into(),
                });
            }
            // BigRational::new reduces and keeps the denominator positive.
            if entries.insert((i, j, k), BigRational::new(num, den)).is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("duplicate index ({i},{j},{k})"),
                });
            }
        }
        if entries.get(&(0, 0, 0)).map(|v| !v.is_one()).unwrap_or(true) {
            return Err(Error::domain(
                "coefficient file must carry the unit entry at (0,0,0)",
            ));
        }
        let max_order = entries.keys().map(|&(i, _, _)| i).max().unwrap_or(0);
        if max_order == 0 {
            return Err(Error::domain("coefficient file has no order >= 1 entries"));
        }
        let expected: Vec<Index> = std::iter::once((0, 0, 0))
            .chain(admissible_indices(max_order))
            .collect();
        for idx in &expected {
            if !entries.contains_key(idx) {
                return Err(Error::domain(format!(
                    "coefficient file missing entry ({},{},{})",
                    idx.0, idx.1, idx.2
                )));
            }
        }
        if entries.len() != expected.len() {
            let extra = entries
                .keys()
                .find(|idx| !expected.contains(idx))
                .cloned()
                .unwrap();
            return Err(Error::domain(format!(
                "coefficient file has an inadmissible entry ({},{},{})",
                extra.0, extra.1, extra.2
            )));
        }
        Ok(CoefficientTable { max_order, entries })
    }
}

/// The admissible (i, j, k) set for orders 1..=max_order, lexicographic.
pub fn admissible_indices(max_order: usize) -> impl Iterator<Item = Index> {
    (1..=max_order).flat_map(move |i| {
        (1..=2 * i).flat_map(move |j| (0..=(2 * i - j).min(i)).map(move |k| (i, j, k)))
    })
}

/// Series polynomial coefficient p_j^{(i)} evaluated at (gamma, theta):
/// sum_k c_k^{(i,j)} gamma^{-(2i - k)} theta^k.
pub fn p_coeff(
    table: &CoefficientTable,
    i: usize,
    j: usize,
    gamma: Complex64,
    theta: f64,
) -> Result<Complex64> {
    if gamma.norm() == 0.0 {
        return Err(Error::domain("p-coefficient requires gamma != 0"));
    }
    if i == 0 || i > table.max_order() || j == 0 || j > 2 * i {
        return Err(Error::domain(format!(
            "p-coefficient index (i={i}, j={j}) outside the table"
        )));
    }
    let inv = Complex64::new(1.0, 0.0) / gamma;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=(2 * i - j).min(i) {
        let c = rational_to_f64(table.coefficient(i, j, k)?);
        acc += c * inv.powi((2 * i - k) as i32) * theta.powi(k as i32);
    }
    Ok(acc)
}

/// Series weights h_n, n = 0..2N-1: contributions epsilon^i c theta^k x^j
/// from every admissible (i, j, k) with i <= N and 2i - j - k = n. The
/// unit entry at (0,0,0) contributes 1 to h_0.
pub fn assemble_h(
    table: &CoefficientTable,
    order: usize,
    eps: f64,
    theta: f64,
    x: f64,
) -> Result<Vec<f64>> {
    validate_assembly(table, order, x)?;
    let mut h = vec![0.0; 2 * order];
    h[0] = 1.0;
    for (&(i, j, k), c) in table.iter() {
        if i == 0 || i > order {
            continue;
        }
        let n = 2 * i - j - k;
        if n < 2 * order {
            h[n] += eps.powi(i as i32)
                * rational_to_f64(c)
                * theta.powi(k as i32)
                * x.powi(j as i32);
        }
    }
    Ok(h)
}

/// Error-kernel weights l_n, n = 0..2N-1, built from order-N coefficients
/// only: sum over (j, k) with j + k = 2N - n of c_k^{(N,j)} theta^k x^j.
pub fn assemble_l(
    table: &CoefficientTable,
    order: usize,
    theta: f64,
    x: f64,
) -> Result<Vec<f64>> {
    validate_assembly(table, order, x)?;
    let mut l = vec![0.0; 2 * order];
    for_order_n_terms(table, order, |j, k, c| {
        let n = 2 * order - j - k;
        if n < 2 * order {
            l[n] += c * theta.powi(k as i32) * x.powi(j as i32);
        }
    })?;
    Ok(l)
}

/// Exact x-derivative of the l_n polynomials.
pub fn assemble_l_dx(
    table: &CoefficientTable,
    order: usize,
    theta: f64,
    x: f64,
) -> Result<Vec<f64>> {
    validate_assembly(table, order, x)?;
    let mut ld = vec![0.0; 2 * order];
    for_order_n_terms(table, order, |j, k, c| {
        let n = 2 * order - j - k;
        if n < 2 * order {
            ld[n] += c * theta.powi(k as i32) * (j as f64) * x.powi(j as i32 - 1);
        }
    })?;
    Ok(ld)
}

fn for_order_n_terms(
    table: &CoefficientTable,
    order: usize,
    mut f: impl FnMut(usize, usize, f64),
) -> Result<()> {
    for j in 1..=2 * order {
        for k in 0..=(2 * order - j).min(order) {
            let c = rational_to_f64(table.coefficient(order, j, k)?);
            f(j, k, c);
        }
    }
    Ok(())
}

fn validate_assembly(table: &CoefficientTable, order: usize, x: f64) -> Result<()> {
    if order == 0 || order > table.max_order() {
        return Err(Error::domain(format!(
            "series order {order} outside table range 1..={}",
            table.max_order()
        )));
    }
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "assembly requires a positive start distance, got {x}"
        )));
    }
    Ok(())
}

/// Assembled weights for one (order, parameters, start) tuple.
#[derive(Debug, Clone)]
pub struct AssembledWeights {
    pub order: usize,
    pub h: Vec<f64>,
    pub l: Vec<f64>,
}

impl AssembledWeights {
    pub fn new(
        table: &CoefficientTable,
        order: usize,
        eps: f64,
        theta: f64,
        x: f64,
    ) -> Result<Self> {
        Ok(AssembledWeights {
            order,
            h: assemble_h(table, order, eps, theta, x)?,
            l: assemble_l(table, order, theta, x)?,
        })
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a scaled division for pathological magnitudes.
        let digits = 30;
        let scale = BigInt::from(10u8).pow(digits);
        let scaled = (r.numer() * &scale) / r.denom();
        scaled.to_f64().unwrap_or(f64::NAN) / 10f64.powi(digits as i32)
    })
}
