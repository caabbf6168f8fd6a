/// Maps values to `rank / n` with average ranks for ties.
pub fn rank_uniform_transform(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their average
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg / n as f64;
        }
        i = j + 1;
    }
    out
}

/// Double-centered absolute-distance matrix, row-major `n × n`.
pub(crate) fn double_centered(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut a = vec![0.0; n * n];
    let mut row_mean = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            let d = (u[i] - u[j]).abs();
            a[i * n + j] = d;
            s += d;
        }
        row_mean[i] = s / n as f64;
    }
    // symmetric: column means equal row means
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] += grand - row_mean[i] - row_mean[j];
        }
    }
    a
}

pub(crate) fn mean_product(a: &[f64], b: &[f64]) -> f64 {
    let n2 = a.len() as f64;
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / n2
}

/// Squared sample distance covariance (V-statistic form).
pub fn distance_covariance_sq(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "distance covariance needs equal lengths");
    mean_product(&double_centered(u), &double_centered(v))
}

/// Ratio of the squared sample distance covariance to the geometric mean of
/// the squared distance variances. Returns 0 when either variance vanishes.
pub fn distance_correlation(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "distance correlation needs equal lengths");
    let a = double_centered(u);
    let b = double_centered(v);
    from_centered(&a, &b)
}

pub(crate) fn from_centered(a: &[f64], b: &[f64]) -> f64 {
    let vuu = mean_product(a, a);
    let vvv = mean_product(b, b);
    let denom = (vuu * vvv).sqrt();
    if !(denom > 0.0) || vuu <= 1e-300 || vvv <= 1e-300 {
        return 0.0;
    }
    (mean_product(a, b) / denom).clamp(0.0, 1.0)
}
