use wallprobe_core::eval::dataset_samples;
use wallprobe_core::gan::{train, GanVariant, TrainConfig};
use wallprobe_core::pipeline::read_dataset;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dataset = read_dataset(std::path::Path::new(&args[1])).unwrap();
    let variant: GanVariant = args[2].parse().unwrap();
    let epochs: usize = args[3].parse().unwrap();
    let weights: Vec<f64> = args[4..].iter().map(|s| s.parse().unwrap()).collect();
    let (tr, va) = dataset_samples(&dataset, variant).unwrap();
    let seeds: Vec<u64> = std::env::var("TUNE_SEEDS")
        .unwrap_or_else(|_| "7".into())
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    for w in weights {
        for &seed in &seeds {
            let cfg = TrainConfig {
                epochs,
                seed,
                g_mse_weight: w,
                ..TrainConfig::default()
            };
            let t = std::time::Instant::now();
            let (bundle, log) = train::<f32>(variant, &tr, &va, &cfg).unwrap();
            if let Ok(path) = std::env::var("TUNE_SAVE") {
                bundle.save(std::fs::File::create(path).unwrap()).unwrap();
            }
            let last = log.epochs.last().unwrap();
            let best = log
                .epochs
                .iter()
                .map(|e| e.val_nmse)
                .fold(f64::INFINITY, f64::min);
            println!(
                "{variant} mse_w={w} seed={seed}: final {:.4} best {:.4} ({:.1}s)",
                last.val_nmse,
                best,
                t.elapsed().as_secs_f64()
            );
        }
    }
}
