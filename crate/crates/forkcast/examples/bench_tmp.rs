use forkcast::tensor::Graph;
use std::time::Instant;

fn main() {
    // planned schedule: stem k7 s4 p3, pools after conv 1,2,3,5
    let chans = [12usize, 24, 48, 96, 128, 192, 224];
    let fcn = [112usize, 96, 64];
    let batch = 8usize;

    let mut g: Graph<f32> = Graph::new();
    let mut params = Vec::new();
    let mut weights = Vec::new();
    let mut c_in = 3usize;
    for (i, &c) in chans.iter().chain(fcn.iter()).enumerate() {
        let (k, _s) = if i == 0 { (7, 4) } else { (3, 1) };
        let w = g.leaf(vec![0.01f32; c * c_in * k * k], vec![c, c_in, k, k], true).unwrap();
        let b = g.leaf(vec![0.0f32; c], vec![c], true).unwrap();
        let ga = g.leaf(vec![1.0f32; c], vec![c], true).unwrap();
        let be = g.leaf(vec![0.0f32; c], vec![c], true).unwrap();
        weights.push((w, b, ga, be));
        params.extend([w, b, ga, be]);
        c_in = c;
    }
    let lw = g.leaf(vec![0.01f32; 10 * (64 * 16 + 3)], vec![10, 64 * 16 + 3], true).unwrap();
    let lb = g.leaf(vec![0.0f32; 10], vec![10], true).unwrap();
    let mark = g.watermark();


    let mut n_param: usize = 0;
    for &(w, b, ga, be) in &weights { n_param += g.numel(w) + g.numel(b) + g.numel(ga) + g.numel(be); }
    n_param += g.numel(lw) + g.numel(lb);
    println!("params: {}", n_param);

    let img = vec![0.5f32; batch * 3 * 288 * 288];
    let env = {
        let mut v = vec![0.0f32; batch * 3];
        for i in 0..batch { v[i * 3] = 1.0; }
        v
    };
    let tgt = vec![0.5f32; batch * 10];

    let t0 = Instant::now();
    let iters = 4;
    for _ in 0..iters {
        g.reset_to(mark);
        let mut x = g.leaf(img.clone(), vec![batch, 3, 288, 288], false).unwrap();
        for (i, &(w, b, ga, be)) in weights.iter().enumerate() {
            let (_k, s, p) = if i == 0 { (7, 4, 3) } else { (3, 1, 1) };
            x = g.conv2d(x, w, b, s, p).unwrap();
            let (y, _, _) = g.batchnorm2d_train(x, ga, be, 1e-5).unwrap();
            x = g.relu(y);
            if matches!(i, 0 | 1 | 2 | 4) {
                x = g.maxpool2d(x, 2, 2).unwrap();
            }
        }
        let sh = g.shape(x).to_vec();
        println!("pre-flatten shape: {:?}", sh);
        let feat = sh[1] * sh[2] * sh[3];
        let x2 = g.reshape(x, vec![batch, feat]).unwrap();
        let e = g.leaf(env.clone(), vec![batch, 3], false).unwrap();
        let cat = g.concat(x2, e, 1).unwrap();
        let out = g.linear(cat, lw, lb).unwrap();
        let t = g.leaf(tgt.clone(), vec![batch, 10], false).unwrap();
        let loss = g.smooth_l1_loss(out, t).unwrap();
        g.backward(loss).unwrap();
        let _ = params.len();
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("fwd+bwd: {:.3} s / sample ({} samples total)", dt / (iters * batch) as f64, iters * batch);
}
