use wallprobe_core::eval::dataset_samples;
use wallprobe_core::gan::GanVariant;
use wallprobe_core::pipeline::read_dataset;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dataset = read_dataset(std::path::Path::new(&args[1])).unwrap();
    for variant in [GanVariant::GanCnnT, GanVariant::GanAnnF] {
        let (tr, _) = dataset_samples(&dataset, variant).unwrap();
        let scale = tr
            .iter()
            .flat_map(|s| s.input.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        let vals: Vec<f64> = tr
            .iter()
            .flat_map(|s| s.input.iter().map(|&v| v / scale))
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        println!(
            "{variant}: field_len {} latent {} normalized std {:.4}",
            variant.field_len(),
            variant.latent_len(),
            var.sqrt()
        );
    }
}
