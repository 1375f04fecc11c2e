//! Semilinear sets, Parikh images of grammars and exact membership with
//! witnessing coefficients.
//!
//! Images are computed bottom-up over the strongly connected components of
//! the grammar, solving each component's equations with Newton iteration in
//! the commutative idempotent semiring of semilinear sets. Membership for
//! huge targets uses the circuit bound: some representation puts every
//! coefficient above the largest circuit kernel entry on an independent set
//! of periods, so only that set needs exact solving.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cfg::{Grammar, Symbol};
use crate::words::{big_string_vec, Vector};

/// Component count above which simplification gives up.
pub const COMPONENT_CAP: usize = 4096;
/// Search leaves explored by one membership query before giving up.
pub const MEMBER_WORK_CAP: u64 = 4_000_000;
const SMALL_SEARCH_LIMIT: u128 = 200_000;
const SIMPLIFY_WORK_CAP: u64 = 20_000;
const MAX_SOLVER_PERIODS: usize = 16;
pub const BRUTE_FORCE_MAX_LEN: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParikhError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("capacity exceeded: {what} (cap {cap})")]
    Capacity { what: String, cap: u64 },
    #[error("empty semilinear set has no coordinate bound")]
    EmptySet,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinearSet {
    pub base: Vector,
    pub periods: Vec<Vector>,
}

impl LinearSet {
    /// Drops zero and duplicate periods, keeping first-occurrence order.
    pub fn new(base: Vector, periods: Vec<Vector>) -> Self {
        let mut seen = BTreeSet::new();
        let periods = periods.into_iter().filter(|p| !p.is_zero() && seen.insert(p.clone())).collect();
        LinearSet { base, periods }
    }

    pub fn singleton(base: Vector) -> Self {
        LinearSet { base, periods: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn evaluate(&self, coefficients: &[BigUint]) -> Vector {
        let mut v = self.base.clone();
        for (p, c) in self.periods.iter().zip(coefficients) {
            v.add_assign_ref(&p.scaled(c));
        }
        v
    }
}

impl fmt::Display for LinearSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for p in &self.periods {
            write!(f, " + N{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemilinearSet {
    pub axes: Vec<String>,
    pub components: Vec<LinearSet>,
}

/// Coefficients reconstructing a vector from one component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub component: usize,
    #[serde(with = "big_string_vec")]
    pub coefficients: Vec<BigUint>,
}

impl Decomposition {
    pub fn reconstruct(&self, s: &SemilinearSet) -> Option<Vector> {
        let comp = s.components.get(self.component)?;
        (comp.periods.len() == self.coefficients.len()).then(|| comp.evaluate(&self.coefficients))
    }

    /// Exact check that the decomposition reproduces `target`.
    pub fn verify(&self, s: &SemilinearSet, target: &Vector) -> bool {
        self.reconstruct(s).as_ref() == Some(target)
    }
}

impl SemilinearSet {
    pub fn empty(axes: Vec<String>) -> Self {
        SemilinearSet { axes, components: Vec::new() }
    }

    pub fn new(axes: Vec<String>, components: Vec<LinearSet>) -> Result<Self, ParikhError> {
        for c in &components {
            for v in std::iter::once(&c.base).chain(&c.periods) {
                if v.dim() != axes.len() {
                    return Err(ParikhError::DimensionMismatch { expected: axes.len(), got: v.dim() });
                }
            }
        }
        let components = components.into_iter().map(|c| LinearSet::new(c.base, c.periods)).collect();
        Ok(SemilinearSet { axes, components })
    }

    pub fn with_axes(axes: &[&str], components: Vec<LinearSet>) -> Result<Self, ParikhError> {
        Self::new(axes.iter().map(|s| s.to_string()).collect(), components)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn union(&self, other: &SemilinearSet) -> Result<SemilinearSet, ParikhError> {
        if self.dim() != other.dim() {
            return Err(ParikhError::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        Ok(SemilinearSet { axes: self.axes.clone(), components })
    }

    /// Largest entry among all bases and periods of this expression.
    pub fn max_coordinate(&self) -> Result<BigUint, ParikhError> {
        self.components
            .iter()
            .flat_map(|c| std::iter::once(&c.base).chain(&c.periods))
            .map(Vector::max_entry)
            .max()
            .ok_or(ParikhError::EmptySet)
    }

    pub fn contains(&self, v: &Vector) -> Result<bool, ParikhError> {
        Ok(member(self, v)?.is_some())
    }

    pub fn expression_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("semilinear json");
        Sha256::digest(json.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for SemilinearSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("∅");
        }
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(" ∪ "))
    }
}

// ---------------------------------------------------------------------------
// membership

fn to_big_int(v: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, v.clone())
}

/// A decomposition of `v`, or `None` when every component was searched
/// exhaustively without success.
pub fn member(s: &SemilinearSet, v: &Vector) -> Result<Option<Decomposition>, ParikhError> {
    if v.dim() != s.dim() {
        return Err(ParikhError::DimensionMismatch { expected: s.dim(), got: v.dim() });
    }
    for (idx, comp) in s.components.iter().enumerate() {
        let Some(rest) = v.checked_sub(&comp.base) else { continue };
        if let Some(coefficients) = cone_solve(rest.entries(), &comp.periods)? {
            let d = Decomposition { component: idx, coefficients };
            debug_assert!(d.verify(s, v));
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Nonnegative integer coefficients `c` with `Σ cᵢ·periods[i] = target`.
pub fn cone_solve(target: &[BigUint], periods: &[Vector]) -> Result<Option<Vec<BigUint>>, ParikhError> {
    let dim = target.len();
    // periods exceeding the target somewhere must get coefficient 0
    let usable: Vec<usize> = (0..periods.len())
        .filter(|&i| !periods[i].is_zero() && periods[i].entries().iter().zip(target).all(|(p, t)| p <= t))
        .collect();
    let mut out = vec![BigUint::zero(); periods.len()];
    if target.iter().all(Zero::is_zero) {
        return Ok(Some(out));
    }
    if usable.is_empty() {
        return Ok(None);
    }
    let bound = |i: usize| -> BigUint {
        periods[i]
            .entries()
            .iter()
            .zip(target)
            .filter(|(p, _)| !p.is_zero())
            .map(|(p, t)| t / p)
            .min()
            .expect("nonzero period")
    };
    let bounds: Vec<BigUint> = usable.iter().map(|&i| bound(i)).collect();
    let mut product: u128 = 1;
    let mut small = target.iter().all(|t| t.to_u64().is_some());
    for b in &bounds {
        match b.to_u128().and_then(|b| product.checked_mul(b + 1)) {
            Some(p) if p <= SMALL_SEARCH_LIMIT => product = p,
            _ => small = false,
        }
    }
    if small {
        let t: Vec<u64> = target.iter().map(|x| x.to_u64().expect("small")).collect();
        let ps: Vec<Vec<u64>> = usable
            .iter()
            .map(|&i| periods[i].entries().iter().map(|x| x.to_u64().expect("period below target")).collect())
            .collect();
        let refs: Vec<&[u64]> = ps.iter().map(|p| p.as_slice()).collect();
        let mut work = 0;
        return match small_cone(&t, &refs, &mut work, MEMBER_WORK_CAP) {
            Some(Some(c)) => {
                for (k, &i) in usable.iter().enumerate() {
                    out[i] = BigUint::from(c[k]);
                }
                Ok(Some(out))
            }
            Some(None) => Ok(None),
            None => Err(ParikhError::Capacity { what: "membership search".into(), cap: MEMBER_WORK_CAP }),
        };
    }
    if usable.len() > MAX_SOLVER_PERIODS {
        return Err(ParikhError::Capacity { what: "periods in one linear set".into(), cap: MAX_SOLVER_PERIODS as u64 });
    }
    let vecs: Vec<Vec<BigInt>> =
        usable.iter().map(|&i| periods[i].entries().iter().map(to_big_int).collect()).collect();
    let t: Vec<BigInt> = target.iter().map(to_big_int).collect();
    match circuit_solve(&t, &vecs, &bounds, dim)? {
        Some(c) => {
            for (k, &i) in usable.iter().enumerate() {
                out[i] = c[k].to_biguint().expect("nonnegative coefficient");
            }
            Ok(Some(out))
        }
        None => Ok(None),
    }
}

/// Depth-first search with per-axis coefficient bounds and gcd pruning.
/// `None` means the work cap was hit.
fn small_cone(target: &[u64], periods: &[&[u64]], work: &mut u64, cap: u64) -> Option<Option<Vec<u64>>> {
    let k = periods.len();
    let d = target.len();
    // suffix gcds per axis
    let mut gcds = vec![vec![0u64; d]; k + 1];
    for i in (0..k).rev() {
        for a in 0..d {
            gcds[i][a] = gcds[i + 1][a].gcd(&periods[i][a]);
        }
    }
    fn go(
        i: usize,
        rem: &mut Vec<u64>,
        periods: &[&[u64]],
        gcds: &[Vec<u64>],
        coef: &mut Vec<u64>,
        work: &mut u64,
        cap: u64,
    ) -> Option<bool> {
        *work += 1;
        if *work > cap {
            return None;
        }
        for a in 0..rem.len() {
            let g = gcds[i][a];
            if (g == 0 && rem[a] != 0) || (g != 0 && !rem[a].is_multiple_of(g)) {
                return Some(false);
            }
        }
        if i == periods.len() {
            return Some(rem.iter().all(|&x| x == 0));
        }
        let p = periods[i];
        let max = p
            .iter()
            .zip(rem.iter())
            .filter(|(p, _)| **p > 0)
            .map(|(p, r)| r / p)
            .min()
            .unwrap_or(0);
        // largest first finds solutions quickly on typical cones
        for c in (0..=max).rev() {
            for a in 0..rem.len() {
                rem[a] -= c * p[a];
            }
            coef[i] = c;
            let r = go(i + 1, rem, periods, gcds, coef, work, cap);
            for a in 0..rem.len() {
                rem[a] += c * p[a];
            }
            match r {
                None => return None,
                Some(true) => return Some(true),
                Some(false) => {}
            }
        }
        coef[i] = 0;
        Some(false)
    }
    let mut rem = target.to_vec();
    let mut coef = vec![0; k];
    match go(0, &mut rem, periods, &gcds, &mut coef, work, cap)? {
        true => Some(Some(coef)),
        false => Some(None),
    }
}

fn rational(x: &BigInt) -> BigRational {
    BigRational::from_integer(x.clone())
}

/// Rank of a set of vectors by exact elimination.
fn rank(vecs: &[&Vec<BigInt>], dim: usize) -> usize {
    let mut rows: Vec<Vec<BigRational>> = vecs.iter().map(|v| v.iter().map(rational).collect()).collect();
    let mut r = 0;
    for col in 0..dim {
        let Some(piv) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else { continue };
        rows.swap(r, piv);
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = &rows[i][col] / &rows[r][col];
                for c in col..dim {
                    let sub = &f * &rows[r][c];
                    rows[i][c] -= sub;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// Primitive integer vector spanning the kernel of a circuit's columns.
fn circuit_kernel(vecs: &[&Vec<BigInt>], dim: usize) -> Vec<BigInt> {
    let k = vecs.len();
    // matrix with columns = vectors
    let mut m: Vec<Vec<BigRational>> = (0..dim).map(|a| vecs.iter().map(|v| rational(&v[a])).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..k {
        let Some(piv) = (r..dim).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(r, piv);
        let lead = m[r][col].clone();
        for c in 0..k {
            m[r][c] = &m[r][c] / &lead;
        }
        for i in 0..dim {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for c in 0..k {
                    let sub = &f * &m[r][c];
                    m[i][c] -= sub;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    let free = (0..k).find(|c| !pivots.contains(c)).expect("circuit has a free column");
    let mut z = vec![BigRational::zero(); k];
    z[free] = BigRational::one();
    for (row, &pc) in pivots.iter().enumerate() {
        z[pc] = -m[row][free].clone();
    }
    let denom_lcm = z.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = z.iter().map(|q| (q * rational(&denom_lcm)).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.into_iter().map(|x| x / &g).collect()
}

struct BasisSolver {
    rows: Vec<usize>,
    inverse: Vec<Vec<BigRational>>,
}

impl BasisSolver {
    fn new(basis: &[&Vec<BigInt>], dim: usize) -> Self {
        let r = basis.len();
        // choose r independent coordinates greedily
        let mut rows = Vec::new();
        for a in 0..dim {
            let mut trial = rows.clone();
            trial.push(a);
            let cols: Vec<Vec<BigInt>> = trial.iter().map(|&a| basis.iter().map(|v| v[a].clone()).collect()).collect();
            let refs: Vec<&Vec<BigInt>> = cols.iter().collect();
            if rank(&refs, r) == trial.len() {
                rows = trial;
            }
            if rows.len() == r {
                break;
            }
        }
        // invert the r×r submatrix M[i][j] = basis[j][rows[i]]
        let mut m: Vec<Vec<BigRational>> = rows
            .iter()
            .map(|&a| {
                let mut row: Vec<BigRational> = basis.iter().map(|v| rational(&v[a])).collect();
                row.extend((0..r).map(|_| BigRational::zero()));
                row
            })
            .collect();
        for (i, row) in m.iter_mut().enumerate() {
            row[r + i] = BigRational::one();
        }
        for col in 0..r {
            let piv = (col..r).find(|&i| !m[i][col].is_zero()).expect("independent basis");
            m.swap(col, piv);
            let lead = m[col][col].clone();
            for c in 0..2 * r {
                m[col][c] = &m[col][c] / &lead;
            }
            for i in 0..r {
                if i != col && !m[i][col].is_zero() {
                    let f = m[i][col].clone();
                    for c in 0..2 * r {
                        let sub = &f * &m[col][c];
                        m[i][c] -= sub;
                    }
                }
            }
        }
        let inverse = m.into_iter().map(|row| row[r..].to_vec()).collect();
        BasisSolver { rows, inverse }
    }

    fn solve(&self, basis: &[&Vec<BigInt>], rhs: &[BigInt]) -> Option<Vec<BigInt>> {
        let mut x = Vec::with_capacity(basis.len());
        for inv_row in &self.inverse {
            let mut acc = BigRational::zero();
            for (k, &a) in self.rows.iter().enumerate() {
                acc += &inv_row[k] * rational(&rhs[a]);
            }
            if !acc.is_integer() || acc < BigRational::zero() {
                return None;
            }
            x.push(acc.to_integer());
        }
        for a in 0..rhs.len() {
            let s: BigInt = basis.iter().zip(&x).map(|(v, c)| &v[a] * c).sum();
            if s != rhs[a] {
                return None;
            }
        }
        Some(x)
    }
}

fn circuit_solve(
    target: &[BigInt],
    vecs: &[Vec<BigInt>],
    bounds: &[BigUint],
    dim: usize,
) -> Result<Option<Vec<BigInt>>, ParikhError> {
    let k = vecs.len();
    let subsets: Vec<u32> = (0u32..(1u32 << k)).collect();
    let pick = |mask: u32| -> Vec<&Vec<BigInt>> { (0..k).filter(|i| mask & (1 << i) != 0).map(|i| &vecs[i]).collect() };
    let ranks: Vec<usize> = subsets.iter().map(|&m| rank(&pick(m), dim)).collect();
    let full_rank = ranks[(1usize << k) - 1];
    let mut kmax = BigInt::zero();
    for &mask in &subsets {
        let size = mask.count_ones() as usize;
        if size == 0 || ranks[mask as usize] != size - 1 {
            continue;
        }
        let minimal = (0..k).filter(|i| mask & (1 << i) != 0).all(|i| ranks[(mask & !(1 << i)) as usize] == size - 1);
        if minimal {
            for z in circuit_kernel(&pick(mask), dim) {
                if z.magnitude() > kmax.magnitude() {
                    kmax = BigInt::from_biguint(Sign::Plus, z.magnitude().clone());
                }
            }
        }
    }
    let mut work = 0u64;
    for &mask in &subsets {
        if mask.count_ones() as usize != full_rank || ranks[mask as usize] != full_rank {
            continue;
        }
        let basis_idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let free_idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) == 0).collect();
        let basis: Vec<&Vec<BigInt>> = basis_idx.iter().map(|&i| &vecs[i]).collect();
        let solver = BasisSolver::new(&basis, dim);
        let caps: Vec<BigInt> = free_idx
            .iter()
            .map(|&i| {
                let b = to_big_int(&bounds[i]);
                if b < kmax { b } else { kmax.clone() }
            })
            .collect();
        let mut coef = vec![BigInt::zero(); free_idx.len()];
        let mut rem = target.to_vec();
        let found = free_search(0, &free_idx, &caps, vecs, &mut rem, &mut coef, &basis, &solver, &mut work)?;
        if let Some(xb) = found {
            let mut out = vec![BigInt::zero(); k];
            for (n, &i) in basis_idx.iter().enumerate() {
                out[i] = xb[n].clone();
            }
            for (n, &i) in free_idx.iter().enumerate() {
                out[i] = coef[n].clone();
            }
            return Ok(Some(out));
        }
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn free_search(
    i: usize,
    free_idx: &[usize],
    caps: &[BigInt],
    vecs: &[Vec<BigInt>],
    rem: &mut Vec<BigInt>,
    coef: &mut Vec<BigInt>,
    basis: &[&Vec<BigInt>],
    solver: &BasisSolver,
    work: &mut u64,
) -> Result<Option<Vec<BigInt>>, ParikhError> {
    *work += 1;
    if *work > MEMBER_WORK_CAP {
        return Err(ParikhError::Capacity { what: "membership search".into(), cap: MEMBER_WORK_CAP });
    }
    if rem.iter().any(|x| x.sign() == Sign::Minus) {
        return Ok(None);
    }
    if i == free_idx.len() {
        return Ok(solver.solve(basis, rem));
    }
    let p = &vecs[free_idx[i]];
    let mut c = BigInt::zero();
    while c <= caps[i] {
        coef[i] = c.clone();
        let found = free_search(i + 1, free_idx, caps, vecs, rem, coef, basis, solver, work)?;
        if found.is_some() {
            return Ok(found);
        }
        for (r, x) in rem.iter_mut().zip(p) {
            *r -= x;
        }
        c += 1;
        if rem.iter().any(|x| x.sign() == Sign::Minus) {
            break;
        }
    }
    // restore
    for (r, x) in rem.iter_mut().zip(p) {
        *r += x * &c;
    }
    coef[i] = BigInt::zero();
    Ok(None)
}

// ---------------------------------------------------------------------------
// Parikh images

type SmallVec = Vec<u64>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Lin {
    base: SmallVec,
    periods: Vec<SmallVec>,
}

type Semi = Vec<Lin>;

fn add(a: &[u64], b: &[u64]) -> SmallVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn in_cone(v: &[u64], periods: &[&[u64]]) -> bool {
    let mut work = 0;
    matches!(small_cone(v, periods, &mut work, SIMPLIFY_WORK_CAP), Some(Some(_)))
}

fn normalize(mut l: Lin) -> Lin {
    l.periods.retain(|p| p.iter().any(|&x| x > 0));
    l.periods.sort();
    l.periods.dedup();
    // drop periods generated by the others, largest first
    let mut order: Vec<usize> = (0..l.periods.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(l.periods[i].iter().sum::<u64>()));
    let mut alive = vec![true; l.periods.len()];
    for i in order {
        let others: Vec<&[u64]> =
            (0..l.periods.len()).filter(|&j| j != i && alive[j]).map(|j| l.periods[j].as_slice()).collect();
        if in_cone(&l.periods[i], &others) {
            alive[i] = false;
        }
    }
    let mut k = 0;
    l.periods.retain(|_| {
        k += 1;
        alive[k - 1]
    });
    l
}

fn lin_contains(b: &Lin, v: &[u64]) -> bool {
    if v.iter().zip(&b.base).any(|(x, y)| x < y) {
        return false;
    }
    let rest: SmallVec = v.iter().zip(&b.base).map(|(x, y)| x - y).collect();
    let refs: Vec<&[u64]> = b.periods.iter().map(|p| p.as_slice()).collect();
    in_cone(&rest, &refs)
}

fn subsumed(a: &Lin, b: &Lin) -> bool {
    if !lin_contains(b, &a.base) {
        return false;
    }
    let refs: Vec<&[u64]> = b.periods.iter().map(|p| p.as_slice()).collect();
    a.periods.iter().all(|p| in_cone(p, &refs))
}

fn simplify(s: Semi) -> Result<Semi, ParikhError> {
    let mut comps: Vec<Lin> = s.into_iter().map(normalize).collect();
    comps.sort();
    comps.dedup();
    // larger cones first so they absorb the smaller ones
    comps.sort_by(|x, y| y.periods.len().cmp(&x.periods.len()).then_with(|| x.cmp(y)));
    let mut alive = vec![true; comps.len()];
    for i in 0..comps.len() {
        for j in 0..comps.len() {
            if i != j && alive[j] && alive[i] && subsumed(&comps[i], &comps[j]) {
                alive[i] = false;
            }
        }
    }
    let mut out: Semi = comps.into_iter().zip(alive).filter(|(_, a)| *a).map(|(c, _)| c).collect();
    while let Some((i, j, merged)) = find_merge(&out) {
        out[i] = merged;
        out.remove(j);
    }
    if out.len() > COMPONENT_CAP {
        return Err(ParikhError::Capacity { what: "semilinear components".into(), cap: COMPONENT_CAP as u64 });
    }
    Ok(out)
}

/// `A ∪ L(b+p, P)` with `p ∈ P` is `L(b, P)` whenever `A ⊆ L(b, P)` and
/// `L(b, P∖{p}) ⊆ A`.
fn find_merge(comps: &Semi) -> Option<(usize, usize, Lin)> {
    for (i, a) in comps.iter().enumerate() {
        for (j, b) in comps.iter().enumerate() {
            if i == j {
                continue;
            }
            for (k, p) in b.periods.iter().enumerate() {
                if add(&a.base, p) != b.base {
                    continue;
                }
                let merged = Lin { base: a.base.clone(), periods: b.periods.clone() };
                let mut rest = b.periods.clone();
                rest.remove(k);
                let lower = Lin { base: a.base.clone(), periods: rest };
                if subsumed(&lower, a) && subsumed(a, &merged) {
                    return Some((i, j, normalize(merged)));
                }
            }
        }
    }
    None
}

fn sum(a: &Semi, b: &Semi) -> Result<Semi, ParikhError> {
    if a.len().saturating_mul(b.len()) > COMPONENT_CAP * 4 {
        return Err(ParikhError::Capacity { what: "semilinear components".into(), cap: COMPONENT_CAP as u64 });
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let mut periods = x.periods.clone();
            periods.extend(y.periods.iter().cloned());
            out.push(Lin { base: add(&x.base, &y.base), periods });
        }
    }
    simplify(out)
}

fn union(a: &Semi, b: &Semi) -> Result<Semi, ParikhError> {
    let mut out = a.clone();
    out.extend(b.iter().cloned());
    simplify(out)
}

fn zero_set(dim: usize) -> Semi {
    vec![Lin { base: vec![0; dim], periods: vec![] }]
}

fn star(a: &Semi, dim: usize) -> Result<Semi, ParikhError> {
    let mut acc = zero_set(dim);
    for c in a {
        let mut periods = c.periods.clone();
        periods.push(c.base.clone());
        let factor = vec![Lin { base: vec![0; dim], periods: vec![] }, Lin { base: c.base.clone(), periods }];
        acc = sum(&acc, &simplify(factor)?)?;
    }
    Ok(acc)
}

struct SccRule {
    constant: Semi,
    vars: Vec<usize>,
}

fn strongly_connected(n: usize, edges: &[Vec<usize>]) -> Vec<Vec<usize>> {
    // iterative Tarjan; components come out in reverse topological order
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < edges[v].len() {
                let w = edges[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort();
                    out.push(comp);
                }
            }
        }
    }
    out
}

fn eval_rules(rules: &[Vec<SccRule>], nu: &[Semi]) -> Result<Vec<Semi>, ParikhError> {
    rules
        .iter()
        .map(|rs| {
            let mut acc: Semi = Vec::new();
            for r in rs {
                let mut term = r.constant.clone();
                for &v in &r.vars {
                    if term.is_empty() {
                        break;
                    }
                    term = sum(&term, &nu[v])?;
                }
                acc.extend(term);
            }
            simplify(acc)
        })
        .collect()
}

/// Least solution of `Y = M·Y ∪ b` by elimination.
fn solve_linear(mut m: Vec<Vec<Semi>>, mut b: Vec<Semi>, dim: usize) -> Result<Vec<Semi>, ParikhError> {
    let n = b.len();
    for k in 0..n {
        let s = star(&m[k][k], dim)?;
        m[k][k] = Vec::new();
        for j in 0..n {
            if !m[k][j].is_empty() {
                m[k][j] = sum(&s, &m[k][j])?;
            }
        }
        b[k] = sum(&s, &b[k])?;
        for i in 0..n {
            if i == k || m[i][k].is_empty() {
                continue;
            }
            let f = std::mem::take(&mut m[i][k]);
            for j in 0..n {
                if j != k && !m[k][j].is_empty() {
                    let add = sum(&f, &m[k][j])?;
                    m[i][j] = union(&m[i][j], &add)?;
                }
            }
            let add = sum(&f, &b[k])?;
            b[i] = union(&b[i], &add)?;
        }
    }
    Ok(b)
}

fn solve_scc(rules: &[Vec<SccRule>], dim: usize) -> Result<Vec<Semi>, ParikhError> {
    let n = rules.len();
    let recursive = rules.iter().flatten().any(|r| !r.vars.is_empty());
    let mut nu = eval_rules(rules, &vec![Vec::new(); n])?;
    if !recursive {
        return Ok(nu);
    }
    for _ in 0..n {
        let fx = eval_rules(rules, &nu)?;
        let mut m: Vec<Vec<Semi>> = vec![vec![Vec::new(); n]; n];
        for (i, rs) in rules.iter().enumerate() {
            for r in rs {
                for (t, &vt) in r.vars.iter().enumerate() {
                    let mut coef = r.constant.clone();
                    for (s, &vs) in r.vars.iter().enumerate() {
                        if s != t && !coef.is_empty() {
                            coef = sum(&coef, &nu[vs])?;
                        }
                    }
                    m[i][vt].extend(coef);
                }
            }
        }
        for row in m.iter_mut() {
            for cell in row.iter_mut() {
                *cell = simplify(std::mem::take(cell))?;
            }
        }
        let b: Vec<Semi> = fx.iter().zip(&nu).map(|(f, v)| union(f, v)).collect::<Result<_, _>>()?;
        nu = solve_linear(m, b, dim)?;
    }
    Ok(nu)
}

fn big_vector(v: &[u64]) -> Vector {
    Vector::from_u64s(v)
}

/// Parikh image with axes given by `labels`; `axis` maps each terminal to its
/// coordinate, or `None` to ignore it.
pub fn parikh_image_with(
    g: &Grammar,
    labels: Vec<String>,
    axis: impl Fn(char) -> Option<usize>,
) -> Result<SemilinearSet, ParikhError> {
    let dim = labels.len();
    let g = g.trim();
    if g.is_empty_language() {
        return Ok(SemilinearSet::empty(labels));
    }
    let n = g.nonterminals().len();
    let mut edges = vec![BTreeSet::new(); n];
    for p in g.productions() {
        for s in &p.rhs {
            if let Symbol::N(b) = s {
                edges[p.lhs].insert(*b);
            }
        }
    }
    let edges: Vec<Vec<usize>> = edges.into_iter().map(|e| e.into_iter().collect()).collect();
    let mut value: Vec<Option<Semi>> = vec![None; n];
    for comp in strongly_connected(n, &edges) {
        let local: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let mut rules: Vec<Vec<SccRule>> = (0..comp.len()).map(|_| Vec::new()).collect();
        for p in g.productions().iter().filter(|p| local.contains_key(&p.lhs)) {
            let mut base = vec![0u64; dim];
            let mut constant = None::<Semi>;
            let mut vars = Vec::new();
            for s in &p.rhs {
                match s {
                    Symbol::T(c) => {
                        if let Some(a) = axis(*c) {
                            base[a] += 1;
                        }
                    }
                    Symbol::N(b) => match local.get(b) {
                        Some(&l) => vars.push(l),
                        None => {
                            let v = value[*b].as_ref().expect("lower component solved");
                            constant = Some(match constant {
                                None => v.clone(),
                                Some(c) => sum(&c, v)?,
                            });
                        }
                    },
                }
            }
            let unit = vec![Lin { base, periods: vec![] }];
            let constant = match constant {
                None => unit,
                Some(c) => sum(&c, &unit)?,
            };
            rules[local[&p.lhs]].push(SccRule { constant, vars });
        }
        let solved = solve_scc(&rules, dim)?;
        for (i, s) in solved.into_iter().enumerate() {
            value[comp[i]] = Some(s);
        }
    }
    let start = value[g.start()].take().expect("start solved");
    let components = start
        .into_iter()
        .map(|l| LinearSet { base: big_vector(&l.base), periods: l.periods.iter().map(|p| big_vector(p)).collect() })
        .collect();
    Ok(SemilinearSet { axes: labels, components })
}

/// Parikh image over the given letters; other terminals are ignored.
pub fn parikh_image_on(g: &Grammar, axes: &[char]) -> Result<SemilinearSet, ParikhError> {
    let labels = axes.iter().map(|c| c.to_string()).collect();
    parikh_image_with(g, labels, |c| axes.iter().position(|&a| a == c))
}

/// Parikh image over the grammar's terminals in sorted order.
pub fn parikh_image(g: &Grammar) -> Result<SemilinearSet, ParikhError> {
    let axes: Vec<char> = g.terminals().iter().copied().collect();
    parikh_image_on(g, &axes)
}

/// Parikh vectors of all words of length at most `max_len`, by dynamic
/// programming over the normal form. Axes are the sorted terminals.
pub fn brute_force_parikh(g: &Grammar, max_len: usize) -> Result<BTreeSet<Vec<u64>>, ParikhError> {
    if max_len > BRUTE_FORCE_MAX_LEN {
        return Err(ParikhError::Capacity { what: "brute-force length".into(), cap: BRUTE_FORCE_MAX_LEN as u64 });
    }
    let cnf = g.to_cnf();
    let axes: Vec<char> = g.terminals().iter().copied().collect();
    let dim = axes.len();
    let nt = cnf.nonterminals.len();
    let mut table: Vec<Vec<BTreeSet<Vec<u64>>>> = vec![vec![BTreeSet::new(); max_len + 1]; nt];
    for &(a, c) in &cnf.unary {
        if max_len >= 1 {
            let mut v = vec![0; dim];
            v[axes.iter().position(|&x| x == c).expect("terminal axis")] = 1;
            table[a][1].insert(v);
        }
    }
    for len in 2..=max_len {
        for &(a, b, c) in &cnf.binary {
            let mut new = BTreeSet::new();
            for k in 1..len {
                for x in &table[b][k] {
                    for y in &table[c][len - k] {
                        new.insert(add(x, y));
                    }
                }
            }
            table[a][len].extend(new);
        }
    }
    let mut out: BTreeSet<Vec<u64>> = table[cnf.start].iter().flatten().cloned().collect();
    if cnf.accepts_empty {
        out.insert(vec![0; dim]);
    }
    Ok(out)
}
