use crate::basis::Axis;

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - r {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        if idx[i] == i + n - r {
            return out;
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}

/// All strings in `{X, Y, Z}^len`, X-first lexicographic order.
pub fn axis_strings(len: usize) -> Vec<Vec<Axis>> {
    let total = 3usize.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let mut s = vec![Axis::X; len];
            for slot in s.iter_mut().rev() {
                *slot = Axis::from_index(code % 3);
                code /= 3;
            }
            s
        })
        .collect()
}

/// Letter counts `(m_x, m_y, m_z)` of an axis string.
pub fn axis_counts(axes: &[Axis]) -> (usize, usize, usize) {
    axes.iter().fold((0, 0, 0), |(x, y, z), a| match a {
        Axis::X => (x + 1, y, z),
        Axis::Y => (x, y + 1, z),
        Axis::Z => (x, y, z + 1),
    })
}
