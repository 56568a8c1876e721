use tabletext::config::{BeamConfig, TrainConfig};
use tabletext::corpus::{generate_synthetic, Corpus};
use tabletext::inference::generate;
use tabletext::planner::plan_infer;
use tabletext::encoder::encode_records;
use tabletext::training::train;

#[test]
#[ignore]
fn scratch_inspect() {
    let all = generate_synthetic(1234, 600, 2, 1);
    let mut train_set = all.clone();
    let test_set = Corpus::new(train_set.examples.split_off(500));
    let base_cfg = TrainConfig {
        d: 16, dropout: 0.0, lr: 0.15, lr_decay: 1.0, batch_size: 2,
        max_epochs: 25, seed: 12, ..TrainConfig::default()
    };
    let base = train(&train_set, &base_cfg).unwrap();
    let cfg = BeamConfig { beam_size: 1, max_length: 60, max_plan_length: 30 };
    for ex in test_set.examples.iter().take(5) {
        let enc = encode_records(&base.model, &ex.records).unwrap();
        let plan = plan_infer(&base.model, &enc.gated, 30).unwrap();
        let gen = generate(&base.model, &ex.records, &cfg).unwrap();
        println!("REF : {}", ex.text.join(" "));
        println!("PLAN gold: {:?}", ex.static_plan.as_ref().unwrap().indices);
        println!("PLAN infr: {:?}", plan.indices);
        println!("GEN : {}\n", gen.join(" "));
    }
}
