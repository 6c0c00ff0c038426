use crate::error::{Error, Result};
use crate::real::pairwise_sum;

/// Pyramid depth of the multi-scale color loss (three bands plus the
/// low-pass residual).
pub const PYRAMID_LEVELS: usize = 4;
const BINOMIAL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Row-major RGB image with an opacity (or mask) channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub color: Vec<[f64; 3]>,
    pub alpha: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, color: Vec<[f64; 3]>, alpha: Vec<f64>) -> Result<Self> {
        if color.len() != width * height || alpha.len() != width * height {
            return Err(Error::dim("frame pixels", width * height, color.len().max(alpha.len())));
        }
        Ok(Self { width, height, color, alpha })
    }
}

/// Image terms, each with its gradient with respect to the predicted color
/// or opacity.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageLosses {
    pub col: f64,
    pub mask: f64,
    pub lappyr: f64,
    pub grad_col: Vec<[f64; 3]>,
    pub grad_mask: Vec<f64>,
    pub grad_lappyr: Vec<[f64; 3]>,
}

/// `L_col`: mean absolute color error over ground-truth foreground rays
/// (mask ≥ 0.5). `L_mask`: mean absolute opacity error over all rays.
/// `L_lappyr`: sum over pyramid levels of the mean absolute band difference.
/// Gradients use the zero subgradient at ties.
pub fn image_losses(pred: &Frame, gt: &Frame) -> Result<ImageLosses> {
    image_losses_with_levels(pred, gt, PYRAMID_LEVELS)
}

pub fn image_losses_with_levels(pred: &Frame, gt: &Frame, levels: usize) -> Result<ImageLosses> {
    if (pred.width, pred.height) != (gt.width, gt.height) {
        return Err(Error::InvalidArgument(format!(
            "image size mismatch: {}x{} vs {}x{}",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    let n = pred.color.len();
    let mut grad_col = vec![[0.0; 3]; n];
    let mut grad_mask = vec![0.0; n];
    let mut grad_lappyr = vec![[0.0; 3]; n];

    let fg: Vec<usize> = (0..n).filter(|&k| gt.alpha[k] >= 0.5).collect();
    let mut terms = Vec::with_capacity(fg.len() * 3);
    let inv = if fg.is_empty() { 0.0 } else { 1.0 / (3 * fg.len()) as f64 };
    for &k in &fg {
        for c in 0..3 {
            let d = pred.color[k][c] - gt.color[k][c];
            terms.push(d.abs());
            grad_col[k][c] = sign(d) * inv;
        }
    }
    let col = pairwise_sum(&terms) * inv;

    let terms: Vec<f64> = (0..n).map(|k| (pred.alpha[k] - gt.alpha[k]).abs()).collect();
    for k in 0..n {
        grad_mask[k] = sign(pred.alpha[k] - gt.alpha[k]) / n as f64;
    }
    let mask = pairwise_sum(&terms) / n as f64;

    let mut lappyr = 0.0;
    for c in 0..3 {
        let diff = Plane {
            w: pred.width,
            h: pred.height,
            v: (0..n).map(|k| pred.color[k][c] - gt.color[k][c]).collect(),
        };
        let (value, grad) = pyramid_l1(&diff, levels);
        // Mean over all three channels of each band.
        lappyr += value / 3.0;
        for k in 0..n {
            grad_lappyr[k][c] = grad.v[k] / 3.0;
        }
    }
    Ok(ImageLosses { col, mask, lappyr, grad_col, grad_mask, grad_lappyr })
}

fn sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

/// Mirror index without repeating the edge sample (`−1 → 1`).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

/// Separable binomial blur (`adjoint` scatters instead of gathers).
fn blur(p: &Plane, adjoint: bool) -> Plane {
    let pass = |src: &[f64], w: usize, h: usize, horizontal: bool| {
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                for (t, &k) in BINOMIAL.iter().enumerate() {
                    let off = t as isize - 2;
                    let (sx, sy) = if horizontal {
                        (reflect(x as isize + off, w), y)
                    } else {
                        (x, reflect(y as isize + off, h))
                    };
                    if adjoint {
                        out[sy * w + sx] += k * src[y * w + x];
                    } else {
                        out[y * w + x] += k * src[sy * w + sx];
                    }
                }
            }
        }
        out
    };
    let tmp = pass(&p.v, p.w, p.h, true);
    Plane { w: p.w, h: p.h, v: pass(&tmp, p.w, p.h, false) }
}

/// Every other sample starting at the origin.
fn decimate(p: &Plane) -> Plane {
    let (w, h) = (p.w.div_ceil(2), p.h.div_ceil(2));
    let mut v = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            v.push(p.v[2 * y * p.w + 2 * x]);
        }
    }
    Plane { w, h, v }
}

/// Adjoint of [`decimate`]: zero insertion into a `w × h` plane.
fn inflate(p: &Plane, w: usize, h: usize) -> Plane {
    let mut v = vec![0.0; w * h];
    for y in 0..p.h {
        for x in 0..p.w {
            v[2 * y * w + 2 * x] = p.v[y * p.w + x];
        }
    }
    Plane { w, h, v }
}

fn scaled(mut p: Plane, s: f64) -> Plane {
    p.v.iter_mut().for_each(|x| *x *= s);
    p
}

fn down(p: &Plane) -> Plane {
    decimate(&blur(p, false))
}

fn down_adjoint(g: &Plane, w: usize, h: usize) -> Plane {
    blur(&inflate(g, w, h), true)
}

/// Zero insertion then blur with gain 4.
fn up(p: &Plane, w: usize, h: usize) -> Plane {
    scaled(blur(&inflate(p, w, h), false), 4.0)
}

fn up_adjoint(g: &Plane) -> Plane {
    scaled(decimate(&blur(g, true)), 4.0)
}

/// `Σ_l mean |band_l|` of the Laplacian pyramid of `d` and its gradient.
fn pyramid_l1(d: &Plane, levels: usize) -> (f64, Plane) {
    let levels = levels.max(1);
    let mut gauss = vec![d.clone()];
    for _ in 1..levels {
        let next = down(gauss.last().unwrap());
        gauss.push(next);
    }
    let mut value = 0.0;
    let mut seeds = Vec::with_capacity(levels);
    for l in 0..levels {
        let band = if l + 1 < levels {
            let u = up(&gauss[l + 1], gauss[l].w, gauss[l].h);
            Plane { w: u.w, h: u.h, v: gauss[l].v.iter().zip(&u.v).map(|(a, b)| a - b).collect() }
        } else {
            gauss[l].clone()
        };
        let inv = 1.0 / band.v.len() as f64;
        let abs: Vec<f64> = band.v.iter().map(|x| x.abs()).collect();
        value += pairwise_sum(&abs) * inv;
        seeds.push(Plane { w: band.w, h: band.h, v: band.v.iter().map(|&x| sign(x) * inv).collect() });
    }
    // band_l = G_l − up(G_{l+1}); G_{l+1} = down(G_l).
    let mut grads = seeds.clone();
    for l in 0..levels - 1 {
        let back = up_adjoint(&seeds[l]);
        for (g, b) in grads[l + 1].v.iter_mut().zip(back.v) {
            *g -= b;
        }
    }
    for l in (1..levels).rev() {
        let back = down_adjoint(&grads[l], gauss[l - 1].w, gauss[l - 1].h);
        for (g, b) in grads[l - 1].v.iter_mut().zip(back.v) {
            *g += b;
        }
    }
    (value, grads.swap_remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::check::{check_gradients, GRADIENT_CHECK_STEP};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(w: usize, h: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let color = (0..w * h).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let alpha = (0..w * h).map(|_| rng.gen()).collect();
        Frame::new(w, h, color, alpha).unwrap()
    }

    #[test]
    fn identical_frames() {
        let f = random_frame(9, 7, 1);
        let l = image_losses(&f, &f).unwrap();
        assert_eq!((l.col, l.mask, l.lappyr), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_color_offset() {
        let gt = Frame::new(4, 4, vec![[0.2, 0.5, 0.7]; 16], vec![1.0; 16]).unwrap();
        let mut pred = gt.clone();
        pred.color.iter_mut().for_each(|c| c.iter_mut().for_each(|v| *v += 0.1));
        let l = image_losses(&pred, &gt).unwrap();
        assert!((l.col - 0.1).abs() < 1e-15);
        assert_eq!(l.mask, 0.0);
    }

    #[test]
    fn size_mismatch() {
        assert!(image_losses(&random_frame(4, 4, 1), &random_frame(4, 5, 2)).is_err());
    }

    /// Dense matrices for the 1D operators, built independently.
    fn blur_matrix(n: usize) -> Vec<Vec<f64>> {
        let k = [1.0, 4.0, 6.0, 4.0, 1.0];
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for t in 0..5 {
                let mut j = i as isize + t as isize - 2;
                if j < 0 {
                    j = -j;
                }
                if j >= n as isize {
                    j = 2 * (n as isize - 1) - j;
                }
                m[i][j as usize] += k[t] / 16.0;
            }
        }
        m
    }

    fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (n, k, m) = (a.len(), b.len(), b[0].len());
        (0..n).map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect()).collect()
    }

    fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
    }

    #[test]
    fn two_level_pyramid_matches_dense_oracle() {
        let (pred, gt) = (random_frame(8, 8, 3), random_frame(8, 8, 4));
        let l = image_losses_with_levels(&pred, &gt, 2).unwrap();
        // D = S·B (blur then keep even samples), U = 2·B·Sᵀ per axis.
        let b = blur_matrix(8);
        let s: Vec<Vec<f64>> = (0..4).map(|i| (0..8).map(|j| if j == 2 * i { 1.0 } else { 0.0 }).collect()).collect();
        let d = matmul(&s, &b);
        let u: Vec<Vec<f64>> = matmul(&b, &transpose(&s)).into_iter().map(|r| r.into_iter().map(|x| 2.0 * x).collect()).collect();
        let mut expect = 0.0;
        for c in 0..3 {
            let img: Vec<Vec<f64>> =
                (0..8).map(|y| (0..8).map(|x| pred.color[y * 8 + x][c] - gt.color[y * 8 + x][c]).collect()).collect();
            let g1 = matmul(&matmul(&d, &img), &transpose(&d));
            let back = matmul(&matmul(&u, &g1), &transpose(&u));
            let band0: f64 = (0..8).flat_map(|y| (0..8).map(move |x| (y, x))).map(|(y, x)| (img[y][x] - back[y][x]).abs()).sum();
            let band1: f64 = g1.iter().flatten().map(|v| v.abs()).sum();
            expect += (band0 / 64.0 + band1 / 16.0) / 3.0;
        }
        assert!((l.lappyr - expect).abs() < 1e-12, "{} vs {expect}", l.lappyr);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (pred, gt) = (random_frame(11, 6, 5), random_frame(11, 6, 6));
        let n = pred.color.len();
        let pack = |f: &Frame| f.color.iter().flatten().copied().chain(f.alpha.iter().copied()).collect::<Vec<f64>>();
        let unpack = |p: &[f64]| {
            let color = p[..3 * n].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            Frame::new(11, 6, color, p[3 * n..].to_vec()).unwrap()
        };
        let color_grad = |g: &[[f64; 3]]| g.iter().flatten().copied().chain(std::iter::repeat(0.0).take(n)).collect();
        type Pick = fn(&ImageLosses) -> f64;
        let terms: [(&str, Pick); 3] = [("col", |l| l.col), ("mask", |l| l.mask), ("lappyr", |l| l.lappyr)];
        for (name, pick) in terms {
            let loss = |p: &[f64]| {
                let l = image_losses(&unpack(p), &gt)?;
                let g: Vec<f64> = match name {
                    "col" => color_grad(&l.grad_col),
                    "lappyr" => color_grad(&l.grad_lappyr),
                    _ => std::iter::repeat(0.0).take(3 * n).chain(l.grad_mask.iter().copied()).collect(),
                };
                Ok((pick(&l), g))
            };
            let c = check_gradients(loss, &pack(&pred), GRADIENT_CHECK_STEP).unwrap();
            assert!(c.passes(), "{name}: {c:?}");
        }
    }
}
