//! Fibonacci substitution words, the one-sided fixed point and sieved potentials.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest word `substitution_word` will materialize.
pub const MAX_WORD_LEN: u64 = 1 << 27;

/// Coupling constant and sieving parameter of one operator family.
///
/// A coupling of exactly zero is the free operator. It is only reachable
/// through [`ModelParams::free`] or [`ModelParams::with_coupling`] and is
/// reported by [`ModelParams::is_free`], so checks that need a positive
/// coupling can skip it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub ell: u32,
}

impl ModelParams {
    pub fn new(lambda: f64, ell: u32) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!(
                "coupling must be finite and positive, got {lambda}"
            )));
        }
        Self::check_ell(ell)?;
        Ok(Self { lambda, ell })
    }

    /// Free-operator mode (`lambda = 0`).
    pub fn free(ell: u32) -> Result<Self> {
        Self::check_ell(ell)?;
        Ok(Self { lambda: 0.0, ell })
    }

    /// Accepts `lambda >= 0`, routing zero to [`ModelParams::free`].
    pub fn with_coupling(lambda: f64, ell: u32) -> Result<Self> {
        if lambda == 0.0 {
            Self::free(ell)
        } else {
            Self::new(lambda, ell)
        }
    }

    pub fn is_free(&self) -> bool {
        self.lambda == 0.0
    }

    fn check_ell(ell: u32) -> Result<()> {
        if ell == 0 {
            return Err(Error::InvalidParams(
                "sieving parameter must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// A finite word over the alphabet {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BinaryWord(Vec<u8>);

impl BinaryWord {
    pub fn from_letters(letters: Vec<u8>) -> Result<Self> {
        if let Some(bad) = letters.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParams(format!(
                "letter {bad} is not in {{0, 1}}"
            )));
        }
        Ok(Self(letters))
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn is_prefix_of(&self, other: &BinaryWord) -> bool {
        other.0.starts_with(&self.0)
    }

    /// One application of `0 -> 1, 1 -> 10`.
    pub fn substitute(&self) -> BinaryWord {
        let mut out = Vec::with_capacity(self.0.len() + self.count_ones());
        for &b in &self.0 {
            if b == 1 {
                out.extend_from_slice(&[1, 0]);
            } else {
                out.push(1);
            }
        }
        BinaryWord(out)
    }
}

impl fmt::Display for BinaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `F_k` with `F_0 = F_1 = 1`.
pub fn fibonacci(k: usize) -> Result<u64> {
    let (mut prev, mut cur) = (1u64, 1u64);
    for _ in 1..k {
        let next = prev
            .checked_add(cur)
            .ok_or(Error::FibonacciOverflow { k })?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Generation `k` whose period `l F_k` is closest to `target` on a log scale.
///
/// Used to compare covers for different `l` at similar band resolution.
pub fn matched_generation(ell: u32, target: f64) -> Result<usize> {
    if !(target >= 1.0) || ell == 0 {
        return Err(Error::InvalidParams(format!(
            "cannot match period {target} with l = {ell}"
        )));
    }
    let mut best = (0, f64::INFINITY);
    for k in 0..=92 {
        let d = ((f64::from(ell) * fibonacci(k)? as f64) / target)
            .ln()
            .abs();
        if d < best.1 {
            best = (k, d);
        }
    }
    Ok(best.0)
}

/// `w_k = S^k(1)`, of length `F_{k+1}`.
pub fn substitution_word(k: usize) -> Result<BinaryWord> {
    let len = fibonacci(k + 1)?;
    if len > MAX_WORD_LEN {
        return Err(Error::ResourceLimit {
            what: "substitution word length",
            requested: len.into(),
            limit: MAX_WORD_LEN.into(),
        });
    }
    // w_k = w_{k-1} w_{k-2}, with w_{-1} = 0 and w_0 = 1.
    let mut letters = Vec::with_capacity(len as usize);
    letters.push(1u8);
    if k >= 1 {
        letters.push(0);
    }
    let mut prev_len = 1usize;
    for _ in 2..=k {
        let cur_len = letters.len();
        letters.extend_from_within(..prev_len);
        prev_len = cur_len;
    }
    Ok(BinaryWord(letters))
}

/// Period word of the approximant `Sigma_k`: the first `F_k` letters of
/// `w_inf`, which is `w_{k-1}` with the convention `w_{-1} = 0`.
pub fn period_word(k: usize) -> Result<BinaryWord> {
    if k == 0 {
        Ok(BinaryWord(vec![0]))
    } else {
        substitution_word(k - 1)
    }
}

/// Letter `n` (0-indexed) of the fixed point `w_inf = 10110101...`.
///
/// Walks the decomposition `w_k = w_{k-1} w_{k-2}` down from the shortest
/// word that covers `n`, so nothing is materialized.
pub fn omega_zero(n: u64) -> u8 {
    // fibs[i] = F_i
    let mut fibs: Vec<u64> = vec![1, 1];
    while *fibs.last().unwrap() <= n {
        let l = fibs.len();
        fibs.push(fibs[l - 1] + fibs[l - 2]);
    }
    // |w_k| = F_{k+1} > n
    let mut k = fibs.len() - 2;
    let mut pos = n;
    loop {
        match k {
            0 => return 1,
            1 => return if pos == 0 { 1 } else { 0 },
            _ => {
                let head = fibs[k]; // |w_{k-1}|
                if pos < head {
                    k -= 1;
                } else {
                    pos -= head;
                    k -= 2;
                }
            }
        }
    }
}

/// Value of the sieved potential `V(n)` for a one-sided sequence `omega`
/// given on indices `0..omega.len()`.
pub fn sieved_potential(params: &ModelParams, omega: &BinaryWord, n: i64) -> Result<f64> {
    let ell = i64::from(params.ell);
    if n.rem_euclid(ell) != 0 {
        return Ok(0.0);
    }
    let idx = n.div_euclid(ell);
    if idx < 0 || idx as usize >= omega.len() {
        return Err(Error::IndexOutOfWindow {
            index: idx,
            len: omega.len(),
        });
    }
    Ok(params.lambda * f64::from(omega.letters()[idx as usize]))
}

/// The sieved expansion of `word`: `ell * word.len()` site potentials.
pub fn sieved_sites(params: &ModelParams, word: &BinaryWord) -> Vec<f64> {
    let ell = params.ell as usize;
    let mut sites = vec![0.0; ell * word.len()];
    for (i, &b) in word.letters().iter().enumerate() {
        sites[i * ell] = params.lambda * f64::from(b);
    }
    sites
}
