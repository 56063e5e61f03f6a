// Kept in its own binary: it mutates the process environment.

use circlelab::cli::{run, CAP_ENV};

#[test]
fn env_cap_overrides_flag() {
    let call = |args: &[&str]| {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut argv = vec!["circlelab"];
        argv.extend_from_slice(args);
        run(argv, &mut out, &mut err)
    };
    let grid = ["--cap", "1000000", "arcs", "--P", "20", "--grid", "10"];
    assert_eq!(call(&grid), 0);
    std::env::set_var(CAP_ENV, "50");
    assert_eq!(call(&grid), 3);
    std::env::set_var(CAP_ENV, "lots");
    assert_eq!(call(&grid), 2);
    std::env::remove_var(CAP_ENV);
    assert_eq!(call(&grid), 0);
}
