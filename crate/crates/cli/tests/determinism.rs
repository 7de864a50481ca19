mod common;

use common::{qcthermo, run};

const CASES: &[&[&str]] = &[
    &["eval", "--system", "well", "--edges", "1,2,3", "--h", "0.3"],
    &["sweep", "--system", "oscillator", "--omega", "1,2", "--direction", "T_to_inf"],
    &["hear-drum", "--edges", "1,2,3"],
    &["gibbs", "--levels", "0,0.5,3,7", "--T", "2", "--seed", "42"],
    &["kw", "--potential", "expr", "--expr", "x1^4 + x2^2"],
];

#[test]
fn repeated_runs_are_byte_identical() {
    for args in CASES {
        for format in ["json", "csv"] {
            let mut a = args.to_vec();
            a.extend(["--format", format]);
            let first = run(&a);
            assert!(first.status.success(), "{a:?}");
            for _ in 0..3 {
                assert_eq!(run(&a).stdout, first.stdout, "{a:?}");
            }
        }
    }
}

#[test]
fn seed_drives_the_random_check() {
    let with_seed = |seed: &str| run(&["gibbs", "--levels", "0,1,2,3", "--seed", seed]).stdout;
    assert_eq!(with_seed("7"), with_seed("7"));
    assert_ne!(with_seed("7"), with_seed("8"));
}

#[test]
fn format_env_var_sets_the_default() {
    let args = ["gibbs", "--levels", "0,1"];
    let env = qcthermo().env("QCTHERMO_FORMAT", "csv").args(args).output().unwrap();
    let flag = run(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(env.stdout, flag.stdout);
    assert!(env.stdout.starts_with(b"n,energy,"));

    // the flag wins over the environment
    let both = qcthermo()
        .env("QCTHERMO_FORMAT", "csv")
        .args(args)
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert!(both.stdout.starts_with(b"{"));

    let bad = qcthermo().env("QCTHERMO_FORMAT", "xml").args(args).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
