//! Runs every acceptance experiment twice and prints one PASS/FAIL line per
//! criterion, with the sub-checks of criterion 4 listed below it.

use iss_lab::criteria::{reproduce_all, CriterionOutcome, Tolerances};

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let rep = reproduce_all(&Tolerances::default());
    let mut failed = 0;
    for id in 1..=10 {
        let key = id.to_string();
        let rows: Vec<&CriterionOutcome> = rep
            .outcomes
            .iter()
            .filter(|o| o.id == key || (o.id.starts_with(&key) && o.id[key.len()..].chars().all(char::is_alphabetic)))
            .collect();
        let pass = !rows.is_empty() && rows.iter().all(|o| o.pass);
        if !pass {
            failed += 1;
        }
        if let [single] = rows.as_slice() {
            if single.id == key {
                println!("{}", single.line());
                continue;
            }
        }
        let failing: Vec<&str> = rows.iter().filter(|o| !o.pass).map(|o| o.id.as_str()).collect();
        println!(
            "{} {key:<3} {} sub-checks{}",
            verdict(pass),
            rows.len(),
            if failing.is_empty() { String::new() } else { format!(", failing: {}", failing.join(", ")) }
        );
        for o in rows {
            println!("    {}", o.line());
        }
    }
    println!("acceptance: {} of 10 criteria pass, {:.1} s", 10 - failed, rep.seconds);
    if failed > 0 {
        std::process::exit(1);
    }
}
