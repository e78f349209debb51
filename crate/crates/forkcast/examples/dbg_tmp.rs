use forkcast::scene::{generate_scene, save_scene, load_scene, SceneConfig};

fn main() {
    let scene = generate_scene(&SceneConfig::default(), 123).unwrap();
    let dir = std::env::temp_dir().join("dbg_scene");
    let _ = std::fs::remove_dir_all(&dir);
    save_scene(&dir, &scene).unwrap();
    let loaded = load_scene(&dir).unwrap();
    for (a, b) in loaded.scene.items.iter().zip(&scene.items) {
        if a.spec != b.spec {
            println!("MISMATCH id {}", a.id);
            let sa = format!("{:?}", a.spec);
            let sb = format!("{:?}", b.spec);
            for (fa, fb) in sa.split(", ").zip(sb.split(", ")) {
                if fa != fb {
                    println!("  loaded: {fa}\n  orig:   {fb}");
                }
            }
        }
    }
    println!("done");
}
