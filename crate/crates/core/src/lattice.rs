//! Exact integer linear algebra: Hermite reduction, integer kernels, rank.
//!
//! Entries are `i128`; the matrices that show up here are a handful of rows
//! of small integers, so overflow is not a practical concern, but every
//! arithmetic step is checked anyway.

/// Row-style Hermite normal form of the lattice spanned by `rows`.
///
/// Returns only the non-zero rows. Pivots are positive and entries above a
/// pivot are reduced into `[0, pivot)`, so two generating sets span the
/// same lattice iff their Hermite forms are equal.
pub fn hermite_normal_form(rows: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .filter(|r| r.iter().any(|&x| x != 0))
        .cloned()
        .collect();
    let mut pivot_row = 0;
    for col in 0..ncols {
        if pivot_row >= m.len() {
            break;
        }
        // Euclid on column `col` among rows pivot_row.. until one non-zero entry remains.
        loop {
            let mut best: Option<usize> = None;
            for i in pivot_row..m.len() {
                if m[i][col] != 0 && best.is_none_or(|b| m[i][col].abs() < m[b][col].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            m.swap(pivot_row, b);
            let mut done = true;
            for i in pivot_row + 1..m.len() {
                if m[i][col] != 0 {
                    let q = m[i][col].div_euclid(m[pivot_row][col]);
                    let pivot = m[pivot_row].clone();
                    sub_scaled(&mut m[i], &pivot, q);
                    if m[i][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if m[pivot_row][col] == 0 {
            continue;
        }
        if m[pivot_row][col] < 0 {
            for x in m[pivot_row].iter_mut() {
                *x = -*x;
            }
        }
        let p = m[pivot_row][col];
        let pivot = m[pivot_row].clone();
        for i in 0..pivot_row {
            let q = m[i][col].div_euclid(p);
            if q != 0 {
                sub_scaled(&mut m[i], &pivot, q);
            }
        }
        pivot_row += 1;
    }
    m.truncate(pivot_row);
    m.retain(|r| r.iter().any(|&x| x != 0));
    m
}

fn sub_scaled(target: &mut [i128], row: &[i128], q: i128) {
    for (t, r) in target.iter_mut().zip(row) {
        *t = t
            .checked_sub(q.checked_mul(*r).expect("lattice entry overflow"))
            .expect("lattice entry overflow");
    }
}

/// Rank over ℚ of the row set.
pub fn rank(rows: &[Vec<i128>]) -> usize {
    hermite_normal_form(rows).len()
}

/// A basis of `{x ∈ ℤ^ncols : A x = 0}`, in Hermite normal form.
///
/// Computed by row-reducing `[Aᵀ | I]`: the unimodular transform recorded
/// on the right block yields kernel vectors for every row whose left block
/// vanishes.
pub fn integer_kernel(a: &[Vec<i128>], ncols: usize) -> Vec<Vec<i128>> {
    let k = a.len();
    let mut m: Vec<Vec<i128>> = (0..ncols)
        .map(|i| {
            let mut row: Vec<i128> = a.iter().map(|eq| eq[i]).collect();
            row.extend((0..ncols).map(|j| i128::from(i == j)));
            row
        })
        .collect();
    let mut pivot_row = 0;
    for col in 0..k {
        if pivot_row >= m.len() {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for i in pivot_row..m.len() {
                if m[i][col] != 0 && best.is_none_or(|b| m[i][col].abs() < m[b][col].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            m.swap(pivot_row, b);
            let mut done = true;
            for i in pivot_row + 1..m.len() {
                if m[i][col] != 0 {
                    let q = m[i][col].div_euclid(m[pivot_row][col]);
                    let pivot = m[pivot_row].clone();
                    sub_scaled(&mut m[i], &pivot, q);
                    if m[i][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if m[pivot_row][col] != 0 {
            pivot_row += 1;
        }
    }
    let kernel: Vec<Vec<i128>> = m
        .into_iter()
        .filter(|row| row[..k].iter().all(|&x| x == 0))
        .map(|row| row[k..].to_vec())
        .collect();
    hermite_normal_form(&kernel)
}

/// Whether two generating sets span the same lattice.
pub fn same_lattice(a: &[Vec<i128>], b: &[Vec<i128>]) -> bool {
    hermite_normal_form(a) == hermite_normal_form(b)
}

/// Whether `v` lies in the lattice spanned by `basis`.
pub fn lattice_contains(basis: &[Vec<i128>], v: &[i128]) -> bool {
    let mut extended = basis.to_vec();
    extended.push(v.to_vec());
    same_lattice(basis, &extended)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hnf_is_canonical() {
        let a = vec![vec![2, 3, 0], vec![0, 2, 5]];
        let b = vec![vec![2, 5, 5], vec![0, 2, 5]];
        assert!(same_lattice(&a, &b));
        let c = vec![vec![4, 6, 0], vec![0, 2, 5]];
        assert!(!same_lattice(&a, &c));
    }

    #[test]
    fn kernel_of_single_form() {
        let k = integer_kernel(&[vec![15, -10, 4]], 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(15 * v[0] - 10 * v[1] + 4 * v[2], 0);
        }
        assert!(same_lattice(&k, &[vec![2, 3, 0], vec![0, 2, 5]]));
    }

    #[test]
    fn kernel_of_full_rank_map_is_trivial() {
        assert!(integer_kernel(&[vec![1, 0], vec![0, 1]], 2).is_empty());
    }

    #[test]
    fn rank_counts_dependencies() {
        assert_eq!(rank(&[vec![4, 0], vec![0, 2], vec![2, 1]]), 2);
        assert_eq!(rank(&[vec![1, 1], vec![2, 2]]), 1);
        assert_eq!(rank(&[]), 0);
    }
}
