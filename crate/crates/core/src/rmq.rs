//! Sparse-table range minimum queries.

/// Static range-minimum structure over a slice, O(n log n) build, O(1) query.
#[derive(Debug, Clone)]
pub struct RangeMin<T> {
    levels: Vec<Vec<T>>,
}

impl<T: Copy + PartialOrd> RangeMin<T> {
    pub fn new(values: &[T]) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().unwrap();
            let next: Vec<T> = (0..prev.len() - width)
                .map(|i| min2(prev[i], prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        RangeMin { levels }
    }

    pub fn len(&self) -> usize {
        self.levels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels[0].is_empty()
    }

    /// Minimum over the closed range `[min(a, b), max(a, b)]`.
    pub fn min(&self, a: usize, b: usize) -> T {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let span = hi - lo + 1;
        let k = usize::BITS - 1 - span.leading_zeros();
        let level = &self.levels[k as usize];
        min2(level[lo], level[hi + 1 - (1 << k)])
    }
}

fn min2<T: PartialOrd>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}
