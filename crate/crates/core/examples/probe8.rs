//! Scratch probe for the hartman6 benchmark regime (not part of the crate API).

use mco_ce::bench::{run_benchmark, Algorithm, BenchParams};
use std::collections::BTreeMap;

fn main() {
    for seed in [808_u64, 2] {
        let params = BenchParams {
            problems: vec!["hartman6".to_string()],
            algorithms: vec![Algorithm::Cesx, Algorithm::Cemx],
            trials: 30,
            master_seed: seed,
            budget: Some(30_000),
            pop_size: Some(300),
            checkpoint_count: 100, // one checkpoint per iteration
            ..BenchParams::default()
        };
        let out = run_benchmark::<f64>(&params).expect("bench");
        let g_star = out.g_star["hartman6"].unwrap();
        println!("== seed {seed} ==");
        for alg in ["CESX", "CEMX"] {
            let mut trapped_hist: BTreeMap<String, usize> = BTreeMap::new();
            let mut free_hist: BTreeMap<String, usize> = BTreeMap::new();
            let (mut trapped_n, mut free_n) = (0usize, 0usize);
            println!("-- {alg} --");
            for r in out.results.iter().filter(|r| r.algorithm == alg) {
                let gap = r.series.last().unwrap().best_g - g_star;
                let trapped = gap > 1e-2;
                // Compress the winner sequence into phase summaries:
                // count (kappa, K) choices in thirds of the run.
                let n = r.series.len();
                let mut phases = [String::new(), String::new(), String::new()];
                for (phase, chunk) in r.series.chunks(n.div_ceil(3)).enumerate() {
                    let mut c: BTreeMap<String, usize> = BTreeMap::new();
                    for p in chunk {
                        *c.entry(format!("{:.2}/{}", p.kappa_sel, p.k_sel)).or_default() += 1;
                    }
                    let top: Vec<String> =
                        c.iter().map(|(k, v)| format!("{k}x{v}")).collect();
                    phases[phase] = top.join(" ");
                }
                // Early aggressiveness: kappa choices over the first 10 iterations.
                let hist = if trapped { &mut trapped_hist } else { &mut free_hist };
                if trapped {
                    trapped_n += 1;
                } else {
                    free_n += 1;
                }
                for p in r.series.iter().take(10) {
                    *hist.entry(format!("{:.2}/{}", p.kappa_sel, p.k_sel)).or_default() += 1;
                }
                println!(
                    "t{:02} gap {:8.1e} {} | early [{}] mid [{}] late [{}]",
                    r.trial,
                    gap,
                    if trapped { "TRAP" } else { "ok  " },
                    phases[0], phases[1], phases[2]
                );
            }
            println!(
                "{alg} early-winner histogram (first 10 iters): trapped ({trapped_n} trials): {:?}",
                trapped_hist
            );
            println!(
                "{alg} early-winner histogram (first 10 iters): untrapped ({free_n} trials): {:?}",
                free_hist
            );
        }
    }
}
