use std::time::Duration;

use planecode::code::{spectrum, verify_t2};
use planecode::constructions::{build_c0, Context};
use planecode::extension::*;

#[test]
fn ternary_free_plane_extension() {
    let ctx = Context::new(3).unwrap();
    let c0 = build_c0(&ctx).unwrap();
    let d = default_decompositions(&ctx, 50_000_000).unwrap();
    let wiring = WiringPlan::identity(&ctx);
    let planes = e_planes(&ctx, &d, &wiring).unwrap();
    let mut per_orbit = std::collections::BTreeMap::new();
    for p in &planes {
        *per_orbit.entry(p.orbit).or_insert(0) += 1;
    }
    let mut sizes: Vec<usize> = per_orbit.values().copied().collect();
    sizes.sort_unstable();
    assert_eq!(sizes, vec![10, 32, 32, 40]);
    let code = extend_by_e(&ctx, &c0, &d, &wiring).unwrap();
    assert_eq!(code.len(), 6915);
    assert!(verify_t2(&code).t2_ok);
    let s = spectrum(&code, &ctx.amb.special_solid());
    assert_eq!(s.0, [4401, 2400, 114, 0]);
    assert_eq!(extension_upper_bound(&ctx, &c0, &d), 6995);
    assert!(ForbiddenTable::new(&ctx, &d).is_err() || ctx.q() == 3);
}

#[test]
fn ternary_candidates_are_free() {
    let ctx = Context::new(3).unwrap();
    let e = enumerate_e(&ctx);
    assert_eq!(e.len(), 10 + 12 * 40);
    assert!(e.iter().all(|c| free_plane(&ctx, &c.plane).unwrap()));
}

#[test]
fn ternary_search_short_budget() {
    let ctx = Context::new(3).unwrap();
    let c0 = build_c0(&ctx).unwrap();
    let cands = extension_candidates(&ctx);
    let start = structured_start(&ctx, &c0).unwrap();
    let cfg = SearchConfig {
        seed: 1,
        budget: Duration::from_secs(std::env::var("SEARCH_SECS").ok().and_then(|s| s.parse().ok()).unwrap_or(5)),
        restarts: 2,
        ..SearchConfig::default()
    };
    let out = search_extension(&c0, &cands, Some(&start), &cfg, &|s, t| eprintln!("best={s} at {t:.1}s")).unwrap();
    eprintln!("vertices={} final={}", out.vertices, out.code.len());
    assert!(out.code.len() >= 6915);
    assert!(verify_t2(&out.code).t2_ok);
    assert!(out.log.windows(2).all(|w| w[0].0 < w[1].0));
}
