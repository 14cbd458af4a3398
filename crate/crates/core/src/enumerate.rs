//! Minimal-change enumeration of subsets.
//!
//! [`RevolvingDoor`] lists the k-subsets of `{0..n}` so that consecutive
//! subsets differ by one swap (one element out, one in). It follows
//! Knuth's Algorithm R (TAOCP 7.2.1.3). [`GrayCode`] lists all subsets with
//! one element flipped per step.

/// A single minimal-change step: `out` leaves the set, `inp` joins it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Swap {
    pub out: usize,
    pub inp: usize,
}

#[derive(Debug, Clone)]
pub struct RevolvingDoor {
    n: usize,
    k: usize,
    // c[1..=k] hold the elements in increasing order, c[k + 1] = n sentinel.
    c: Vec<usize>,
    done: bool,
}

impl RevolvingDoor {
    /// Starts at `{0, .., k-1}`. Requires `k <= n <= 64`.
    pub fn new(n: usize, k: usize) -> Self {
        assert!(k <= n && n <= 64, "revolving door needs k <= n <= 64");
        let mut c = Vec::with_capacity(k + 2);
        c.push(0);
        c.extend(0..k);
        c.push(n);
        RevolvingDoor { n, k, c, done: false }
    }

    pub fn mask(&self) -> u64 {
        self.c[1..=self.k].iter().fold(0, |m, &e| m | 1 << e)
    }

    /// Moves to the next subset and reports the swap, or `None` at the end.
    pub fn advance(&mut self) -> Option<Swap> {
        if self.done {
            return None;
        }
        let step = match self.k {
            0 => None,
            k if k == self.n => None,
            1 => {
                let cur = self.c[1];
                (cur + 1 < self.n).then(|| {
                    self.c[1] = cur + 1;
                    Swap { out: cur, inp: cur + 1 }
                })
            }
            _ => self.algorithm_r(),
        };
        if step.is_none() {
            self.done = true;
        }
        step
    }

    fn algorithm_r(&mut self) -> Option<Swap> {
        let k = self.k;
        let c = &mut self.c;
        // R3: easy case
        let mut j = 2;
        let mut try_decrease = if k % 2 == 1 {
            if c[1] + 1 < c[2] {
                let old = c[1];
                c[1] += 1;
                return Some(Swap { out: old, inp: old + 1 });
            }
            true
        } else {
            if c[1] > 0 {
                let old = c[1];
                c[1] -= 1;
                return Some(Swap { out: old, inp: old - 1 });
            }
            false
        };
        loop {
            if try_decrease {
                // R4: here c[j] = c[j-1] + 1
                if c[j] >= j {
                    let out = c[j];
                    c[j] = c[j - 1];
                    c[j - 1] = j - 2;
                    return Some(Swap { out, inp: j - 2 });
                }
                j += 1;
                if j > k {
                    return None;
                }
            } else {
                // R5: here c[j-1] = j - 2
                if c[j] + 1 < c[j + 1] {
                    let inp = c[j] + 1;
                    c[j - 1] = c[j];
                    c[j] = inp;
                    return Some(Swap { out: j - 2, inp });
                }
                j += 1;
                if j > k {
                    return None;
                }
            }
            try_decrease = !try_decrease;
        }
    }
}

/// Reflected binary Gray code over `n` bits, starting from the empty set.
#[derive(Debug, Clone)]
pub struct GrayCode {
    n: usize,
    step: u64,
}

impl GrayCode {
    pub fn new(n: usize) -> Self {
        assert!(n <= 63, "gray code needs n <= 63");
        GrayCode { n, step: 0 }
    }

    /// Index of the bit flipped to reach the next subset.
    pub fn advance(&mut self) -> Option<usize> {
        self.step += 1;
        if self.step >= 1u64 << self.n {
            return None;
        }
        Some(self.step.trailing_zeros() as usize)
    }
}

/// All `k`-subsets of `{0..n}` as masks in increasing numeric order.
pub fn lex_masks(n: usize, k: usize) -> impl Iterator<Item = u64> {
    assert!(k <= n && n <= 63);
    let limit = 1u64 << n;
    let first = if k == 0 { 0 } else { (1u64 << k) - 1 };
    let mut next = Some(first);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack
            let low = cur & cur.wrapping_neg();
            let ripple = cur + low;
            let succ = (((ripple ^ cur) >> 2) / low) | ripple;
            (succ < limit).then_some(succ)
        };
        Some(cur)
    })
}
