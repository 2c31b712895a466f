use num_complex::Complex64;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Sparse polynomial with complex coefficients.
///
/// Keys are exponent vectors of length `n_vars`; zero coefficients are never
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n_vars: usize,
    terms: BTreeMap<Vec<u16>, Complex64>,
}

impl Polynomial {
    pub fn zero(n_vars: usize) -> Self {
        Self { n_vars, terms: BTreeMap::new() }
    }

    pub fn constant(n_vars: usize, c: Complex64) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(vec![0; n_vars], c);
        p
    }

    pub fn one(n_vars: usize) -> Self {
        Self::constant(n_vars, Complex64::new(1.0, 0.0))
    }

    pub fn var(n_vars: usize, k: usize) -> Self {
        assert!(k < n_vars, "variable index out of range");
        let mut e = vec![0; n_vars];
        e[k] = 1;
        let mut p = Self::zero(n_vars);
        p.add_term(e, Complex64::new(1.0, 0.0));
        p
    }

    pub fn monomial(exponents: Vec<u16>, c: Complex64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// `sum_k coeffs[k] x_{offset + k}`.
    pub fn linear(n_vars: usize, offset: usize, coeffs: &[Complex64]) -> Self {
        let mut p = Self::zero(n_vars);
        for (k, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; n_vars];
            e[offset + k] = 1;
            p.add_term(e, c);
        }
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u16], Complex64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(total).max().unwrap_or(0)
    }

    /// `Some(0)` if every monomial is even, `Some(1)` if every one is odd.
    pub fn parity(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|e| total(e) % 2);
        let first = it.next().unwrap_or(0);
        it.all(|p| p == first).then_some(first)
    }

    pub fn add_term(&mut self, exponents: Vec<u16>, c: Complex64) {
        assert_eq!(exponents.len(), self.n_vars);
        use std::collections::btree_map::Entry;
        let zero = Complex64::new(0.0, 0.0);
        match self.terms.entry(exponents) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == zero {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if c != zero {
                    v.insert(c);
                }
            }
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut p = Self::zero(self.n_vars);
        if c != Complex64::new(0.0, 0.0) {
            for (e, &v) in &self.terms {
                p.terms.insert(e.clone(), v * c);
            }
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.n_vars);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        assert_eq!(x.len(), self.n_vars);
        self.terms
            .iter()
            .map(|(e, &c)| {
                e.iter()
                    .zip(x)
                    .filter(|(&k, _)| k > 0)
                    .fold(c, |acc, (&k, &xi)| acc * xi.powu(k as u32))
            })
            .sum()
    }

    pub fn eval_real(&self, x: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.n_vars);
        self.terms
            .iter()
            .map(|(e, &c)| {
                let m: f64 = e
                    .iter()
                    .zip(x)
                    .filter(|(&k, _)| k > 0)
                    .map(|(&k, &xi)| xi.powi(k as i32))
                    .product();
                c * m
            })
            .sum()
    }

    /// The constant value if the polynomial has degree 0.
    pub fn as_constant(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => self.terms.get(&vec![0; self.n_vars]).copied(),
            _ => None,
        }
    }

    /// Re-index into `n_vars` variables, variable `k` becoming `offset + k`.
    pub fn embed(&self, n_vars: usize, offset: usize) -> Self {
        assert!(offset + self.n_vars <= n_vars);
        let mut p = Self::zero(n_vars);
        for (e, &c) in &self.terms {
            let mut f = vec![0; n_vars];
            f[offset..offset + self.n_vars].copy_from_slice(e);
            p.terms.insert(f, c);
        }
        p
    }

    /// Replace variable `k` by `subs[k]`.
    pub fn substitute(&self, subs: &[Polynomial]) -> Self {
        assert_eq!(subs.len(), self.n_vars);
        let m = subs.first().map(|s| s.n_vars).unwrap_or(0);
        let mut powers: Vec<Vec<Polynomial>> = subs.iter().map(|s| vec![Self::one(s.n_vars), s.clone()]).collect();
        let mut out = Self::zero(m);
        for (e, &c) in &self.terms {
            let mut term = Self::constant(m, c);
            for (k, &d) in e.iter().enumerate() {
                let d = d as usize;
                while powers[k].len() <= d {
                    let next = &powers[k][powers[k].len() - 1] * &subs[k];
                    powers[k].push(next);
                }
                if d > 0 {
                    term = &term * &powers[k][d];
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Drop coefficients with modulus at most `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        Self {
            n_vars: self.n_vars,
            terms: self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(e, &c)| (e.clone(), c)).collect(),
        }
    }
}

fn total(e: &Vec<u16>) -> usize {
    e.iter().map(|&k| k as usize).sum()
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars);
        let mut p = self.clone();
        for (e, &c) in &rhs.terms {
            p.add_term(e.clone(), c);
        }
        p
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars);
        let mut acc: BTreeMap<Vec<u16>, Complex64> = BTreeMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                let e: Vec<u16> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                *acc.entry(e).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
            }
        }
        acc.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        Polynomial { n_vars: self.n_vars, terms: acc }
    }
}
