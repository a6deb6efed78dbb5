use corrseg::hs::{horn_schunck, HsParams};
use corrseg::wmf::{weighted_median_refine, WmfParams};
use corrseg::synth::{synthetic_pair, SyntheticSpec};
use corrseg::plane::Plane;
use corrseg::image::Image;

fn guide_gradient(guide: &Image) -> Plane {
    let (w, h) = (guide.width(), guide.height());
    let mut acc = Plane::new(w, h);
    for c in 0..guide.channels() {
        let mut chan = Plane::new(w, h);
        for i in 0..w * h { chan.data[i] = guide.data()[i * guide.channels() + c] as f64; }
        let gx = chan.dx(); let gy = chan.dy();
        for i in 0..w * h { acc.data[i] += gx.data[i]*gx.data[i] + gy.data[i]*gy.data[i]; }
    }
    for v in &mut acc.data { *v = v.sqrt(); }
    acc
}

fn main() {
    let band = (46.0, 36.0, 64.0, 100.0);
    let spec = SyntheticSpec { noise_sigma: 0.01, textureless_band: Some(band), ..Default::default() };
    let scene = synthetic_pair(&spec).unwrap();
    let raw = horn_schunck(&scene.i1, &scene.i2, &HsParams::default()).unwrap();
    let flow = weighted_median_refine(&raw, &scene.i1, &WmfParams::default()).unwrap();
    let gg = guide_gradient(&scene.i1);
    // otsu replicated: threshold at max-normalized histogram — approximate via library behavior by percentile scan
    let mut sorted = gg.data.clone(); sorted.sort_by(|a,b| a.partial_cmp(b).unwrap());
    // just print gg stats and J around the corner
    let up = flow.u_plane(); let vp = flow.v_plane();
    let (ux, uy, vx, vy) = (up.dx(), up.dy(), vp.dx(), vp.dy());
    let jac = |x: usize, y: usize| -> f64 {
        (ux.get(x,y).powi(2)+uy.get(x,y).powi(2)+vx.get(x,y).powi(2)+vy.get(x,y).powi(2)).sqrt()
    };
    println!("gg: p50 {:.3} p75 {:.3} p85 {:.3} p95 {:.3}", sorted[sorted.len()/2], sorted[sorted.len()*3/4], sorted[sorted.len()*85/100], sorted[sorted.len()*95/100]);
    for y in (96..120usize).step_by(2) {
        let row: String = (32..58).map(|x| {
            let j = jac(x, y);
            let g = gg.get(x, y);
            if j > 1.0 { '#' } else if j > 0.5 && g > 0.12 { 'o' }
            else if j > 0.5 { 'j' } else if g > 0.12 { '+' } else { '.' }
        }).collect();
        println!("y={y:3} {row}");
    }
}
