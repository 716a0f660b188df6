// Metrics on a small hand-filled latency table.

use doptune::metrics::{self, LatencyTable, MetricsReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dops = [1, 8, 32];
    // (plan, actual row, predicted row)
    let rows = [
        ("scan-heavy", [900.0, 140.0, 60.0], [850.0, 150.0, 70.0]),
        ("point-lookup", [12.0, 13.0, 15.0], [11.0, 12.0, 12.5]),
        ("spilling-sort", [2000.0, 320.0, 900.0], [1900.0, 330.0, 110.0]),
    ];
    let mut table = LatencyTable::new(&dops);
    for (plan, actual, predicted) in &rows {
        for (i, d) in dops.iter().enumerate() {
            table.insert(plan, *d, actual[i], predicted[i])?;
        }
    }

    for (plan, _, _) in &rows {
        println!("{plan:<14} RPE {:.3}  SPE {:.3}", metrics::rpe(&table, plan)?, metrics::spe(&table, plan)?);
    }
    let report = MetricsReport::compute(&table)?;
    println!("\nTQ {:.5} (realized {:.5}, oracle {:.5})", report.tq, report.realized_tq, report.oracle_tq);
    println!("TW {:.5} (realized {:.5}, oracle {:.5})", report.tw, report.realized_tw, report.oracle_tw);
    println!("\n{}", report.to_json());
    print!("{}", report.to_csv());
    Ok(())
}
