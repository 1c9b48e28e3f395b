use planecode::code::{check_spectrum_system, spectrum, verify_t2};
use planecode::constructions::*;

#[test]
fn ternary_codes() {
    let ctx = Context::new(3).unwrap();
    let s = ctx.amb.special_solid();
    let packing = find_line_packing(&ctx.proj).unwrap();
    let expected = [
        (almrd_code(&ctx, &packing).unwrap(), 6691),
        (rspace_code(&ctx).unwrap(), 6597),
        (rspace_aug_code(&ctx, &packing).unwrap(), 6727),
        (build_c0(&ctx).unwrap(), 6801),
        (build_c(&ctx, None).unwrap(), 6881),
        (build_c_ext(&ctx, None).unwrap(), 6891),
    ];
    for (code, size) in &expected {
        assert_eq!(code.len(), *size, "{}", code.tag());
        assert!(verify_t2(code).t2_ok, "{}", code.tag());
        assert!(check_spectrum_system(&spectrum(code, &s), 3).ok);
    }
}

#[test]
fn ternary_new_planes() {
    let ctx = Context::new(3).unwrap();
    let n = enumerate_n(&ctx);
    assert_eq!(n.len(), 78 * 40);
    let (l0, g1) = expurgate(&ctx).unwrap();
    assert_eq!(l0.len(), 4401);
    let planes: Vec<_> = n.into_iter().map(|p| p.plane).collect();
    verify_coset_decomposition(&ctx, &g1, &planes).unwrap();
    let classes = collision_classes(&ctx.proj);
    assert_eq!(classes.iter().filter(|c| c.members.len() == 1).count(), 30);
    assert_eq!(trivial_class(&ctx.proj).len(), 9);
}

#[test]
fn ternary_double_class_choice_collides() {
    let ctx = Context::new(3).unwrap();
    let c = build_c(&ctx, None).unwrap();
    let class = trivial_class(&ctx.proj);
    let extra: Vec<_> = new_planes_for(&ctx, 5, class[1]).into_iter().map(|n| n.plane).collect();
    let bad = c.extended(extra, "bad").unwrap();
    let report = verify_t2(&bad);
    assert!(!report.t2_ok);
    let (a, b) = report.violation.unwrap();
    assert_eq!(a.intersect_dim(&b).unwrap(), 2);
}
