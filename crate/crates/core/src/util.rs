/// `points` log-spaced values from `a` to `b` inclusive.
pub fn log_space(a: f64, b: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            let step = (lb - la) / (points - 1) as f64;
            (0..points)
                .map(|i| {
                    if i == points - 1 {
                        b
                    } else if i == 0 {
                        a
                    } else {
                        (la + step * i as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `max / min` of a nonempty slice of positive values.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}
