//! Normal-ordered monomials in `a^dagger, a` times products of two-level
//! transition operators on labelled sites.

use num_complex::Complex64 as C64;

/// Transition operators `sigma^12`, `sigma^21`, `sigma^22`. The ground
/// projector `sigma^11` is always expanded as `1 - sigma^22`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum SiteOp {
    Lower,
    Raise,
    Excited,
}

impl SiteOp {
    pub(crate) fn dagger(self) -> Self {
        match self {
            SiteOp::Lower => SiteOp::Raise,
            SiteOp::Raise => SiteOp::Lower,
            SiteOp::Excited => SiteOp::Excited,
        }
    }
}

/// `x y` on one site, as a sum of `(coefficient, operator)` with `None`
/// meaning the identity.
fn site_product(x: SiteOp, y: SiteOp) -> &'static [(f64, Option<SiteOp>)] {
    use SiteOp::*;
    match (x, y) {
        (Lower, Raise) => &[(1.0, None), (-1.0, Some(Excited))],
        (Lower, Excited) => &[(1.0, Some(Lower))],
        (Raise, Lower) => &[(1.0, Some(Excited))],
        (Excited, Raise) => &[(1.0, Some(Raise))],
        (Excited, Excited) => &[(1.0, Some(Excited))],
        _ => &[],
    }
}

/// `coef * e^{i phase omega_d t} * a^dagger^cr a^an * prod_sites op`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Term {
    pub coef: C64,
    pub phase: i32,
    pub cr: u32,
    pub an: u32,
    /// Sorted by label, one entry per label.
    pub sites: Vec<(u8, SiteOp)>,
}

pub(crate) type Expr = Vec<Term>;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Term {
    pub(crate) fn new(coef: C64, phase: i32, cr: u32, an: u32, mut sites: Vec<(u8, SiteOp)>) -> Self {
        sites.sort_by_key(|s| s.0);
        debug_assert!(sites.windows(2).all(|w| w[0].0 != w[1].0));
        Self {
            coef,
            phase,
            cr,
            an,
            sites,
        }
    }

    pub(crate) fn boson(coef: f64, cr: u32, an: u32) -> Self {
        Self::new(C64::new(coef, 0.0), 0, cr, an, Vec::new())
    }

    pub(crate) fn site(label: u8, op: SiteOp) -> Self {
        Self::new(C64::new(1.0, 0.0), 0, 0, 0, vec![(label, op)])
    }

    pub(crate) fn degree(&self) -> u32 {
        self.cr + self.an + self.sites.len() as u32
    }

    pub(crate) fn scaled(&self, c: C64) -> Self {
        Term {
            coef: self.coef * c,
            ..self.clone()
        }
    }

    pub(crate) fn dagger(&self) -> Self {
        Term {
            coef: self.coef.conj(),
            phase: -self.phase,
            cr: self.an,
            an: self.cr,
            sites: self.sites.iter().map(|&(l, o)| (l, o.dagger())).collect(),
        }
    }

    /// Product `self * other`, normal ordered.
    pub(crate) fn mul(&self, other: &Term) -> Expr {
        // site part
        let mut site_parts: Vec<(f64, Vec<(u8, SiteOp)>)> = vec![(1.0, Vec::new())];
        let (mut i, mut j) = (0, 0);
        let (x, y) = (&self.sites, &other.sites);
        while i < x.len() || j < y.len() {
            let take_x = j >= y.len() || (i < x.len() && x[i].0 < y[j].0);
            let take_y = i >= x.len() || (j < y.len() && y[j].0 < x[i].0);
            if take_x {
                for p in &mut site_parts {
                    p.1.push(x[i]);
                }
                i += 1;
            } else if take_y {
                for p in &mut site_parts {
                    p.1.push(y[j]);
                }
                j += 1;
            } else {
                let label = x[i].0;
                let prod = site_product(x[i].1, y[j].1);
                if prod.is_empty() {
                    return Vec::new();
                }
                let mut next = Vec::with_capacity(site_parts.len() * prod.len());
                for (c, ops) in &site_parts {
                    for &(pc, pop) in prod {
                        let mut ops = ops.clone();
                        if let Some(op) = pop {
                            ops.push((label, op));
                        }
                        next.push((c * pc, ops));
                    }
                }
                site_parts = next;
                i += 1;
                j += 1;
            }
        }
        // boson part: (a+^c1 a^n1)(a+^c2 a^n2) = sum_k C(n1,k) C(c2,k) k! a+^(c1+c2-k) a^(n1+n2-k)
        let mut out = Vec::new();
        for k in 0..=self.an.min(other.cr) {
            let w = binomial(self.an, k) * binomial(other.cr, k) * factorial(k);
            for (c, ops) in &site_parts {
                out.push(Term {
                    coef: self.coef * other.coef * (w * c),
                    phase: self.phase + other.phase,
                    cr: self.cr + other.cr - k,
                    an: self.an + other.an - k,
                    sites: ops.clone(),
                });
            }
        }
        out
    }
}

pub(crate) fn mul(x: &Expr, y: &Expr) -> Expr {
    let mut out = Vec::new();
    for a in x {
        for b in y {
            out.extend(a.mul(b));
        }
    }
    out
}

pub(crate) fn scale(x: &Expr, c: C64) -> Expr {
    x.iter().map(|t| t.scaled(c)).collect()
}

/// `x y - y x`.
pub(crate) fn commutator(x: &Expr, y: &Expr) -> Expr {
    let mut out = mul(x, y);
    out.extend(scale(&mul(y, x), C64::new(-1.0, 0.0)));
    out
}

/// Adjoint dissipator `L^dagger O L - (L^dagger L O + O L^dagger L)/2`.
pub(crate) fn adjoint_dissipator(l: &Expr, o: &Expr) -> Expr {
    let ld: Expr = l.iter().map(Term::dagger).collect();
    let ldl = mul(&ld, l);
    let mut out = mul(&mul(&ld, o), l);
    out.extend(scale(&mul(&ldl, o), C64::new(-0.5, 0.0)));
    out.extend(scale(&mul(o, &ldl), C64::new(-0.5, 0.0)));
    out
}

/// Merge like terms and drop cancelled ones.
pub(crate) fn simplify(x: Expr) -> Expr {
    let mut out: Expr = Vec::new();
    for t in x {
        if let Some(e) = out
            .iter_mut()
            .find(|e| e.phase == t.phase && e.cr == t.cr && e.an == t.an && e.sites == t.sites)
        {
            e.coef += t.coef;
        } else {
            out.push(t);
        }
    }
    out.retain(|t| t.coef.norm() > 1e-13);
    out
}
