//! Seeded Fruchterman-Reingold layout for the graph panel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LAYOUT_SEED: u64 = 0x6c61_796f_7574;
const ITERATIONS: usize = 300;
const GRAVITY: f64 = 0.05;

/// Unit-square node positions for `n` nodes joined by `edges` (treated as
/// undirected). Deterministic for a given input.
pub fn force_layout(n: usize, edges: &[(usize, usize)]) -> Vec<(f64, f64)> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![(0.5, 0.5)];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(LAYOUT_SEED);
    let mut pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let k = (1.0 / n as f64).sqrt();
    let mut temp = 0.1;
    for _ in 0..ITERATIONS {
        let mut disp = vec![(0.0f64, 0.0f64); n];
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                let d = (dx * dx + dy * dy).sqrt().max(1e-6);
                let f = k * k / d;
                disp[i].0 += dx / d * f;
                disp[i].1 += dy / d * f;
                disp[j].0 -= dx / d * f;
                disp[j].1 -= dy / d * f;
            }
        }
        for &(a, b) in edges {
            if a == b {
                continue;
            }
            let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
            let d = (dx * dx + dy * dy).sqrt().max(1e-6);
            let f = d * d / k;
            disp[a].0 -= dx / d * f;
            disp[a].1 -= dy / d * f;
            disp[b].0 += dx / d * f;
            disp[b].1 += dy / d * f;
        }
        // gravity keeps disconnected components from drifting apart
        for (p, d) in pos.iter().zip(disp.iter_mut()) {
            d.0 -= GRAVITY * (p.0 - 0.5) / k;
            d.1 -= GRAVITY * (p.1 - 0.5) / k;
        }
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = (d.0 * d.0 + d.1 * d.1).sqrt().max(1e-12);
            let step = len.min(temp);
            p.0 += d.0 / len * step;
            p.1 += d.1 / len * step;
        }
        temp *= 0.985;
    }
    // rescale into the unit square
    let (min_x, max_x) = pos
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (min_y, max_y) = pos
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let sx = (max_x - min_x).max(1e-12);
    let sy = (max_y - min_y).max(1e-12);
    pos.iter().map(|p| ((p.0 - min_x) / sx, (p.1 - min_y) / sy)).collect()
}
