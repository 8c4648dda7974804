use gestgrasp::geometry::{
    backproject, fit_line_ransac, project, CameraIntrinsics, PixelPoint, RansacParams, Ray, Rotation3, Vec3,
};
use gestgrasp::gesture::{canonicalize, cosine, gesture_similarity, landmarks, Chirality};
use gestgrasp::grasp::{frobenius_deviation, select_grasp, AttentionMode, SelectionParams};
use gestgrasp::memory::{validate_bank, EntryRecord, MemoryBank};
use gestgrasp::pointing::{crop_region, intersect_ray_depth};
use gestgrasp::retrieval::retrieve;
use gestgrasp::synth::{
    random_rotation, render_depth, synth_bank, synth_candidates, synth_featmap_pair, synth_hand, BankSpec,
    FeaturePairSpec, Primitive, SceneSpec, Sim3,
};
use gestgrasp::transfer::transfer_contact;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn k() -> CameraIntrinsics {
    CameraIntrinsics::new(120.0, 110.0, 40.0, 30.0, 80, 60).unwrap()
}

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn rotation() -> impl Strategy<Value = Rotation3> {
    any::<u64>().prop_map(|s| random_rotation(&mut ChaCha8Rng::seed_from_u64(s)))
}

fn sim3() -> impl Strategy<Value = Sim3> {
    (rotation(), 0.2..5.0f64, vec3(1.0)).prop_map(|(rotation, scale, translation)| Sim3 { rotation, scale, translation })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn project_inverts_backproject(u in -0.5..79.4f64, v in -0.5..59.4f64, d in 0.01..50.0f64) {
        let p = PixelPoint::new(u, v);
        let q = project(backproject(p, d, &k()).unwrap(), &k()).unwrap();
        prop_assert!((q.u - u).abs() < 1e-9 && (q.v - v).abs() < 1e-9);
    }

    #[test]
    fn collinear_points_fit_exactly(origin in vec3(1.0), dir in vec3(1.0), n in 2usize..12, step in 0.01..0.2f64) {
        let d = dir.normalized();
        prop_assume!(d.is_some());
        let d = d.unwrap();
        let pts: Vec<Vec3> = (0..n).map(|i| origin + d * (step * i as f64)).collect();
        let fit = fit_line_ransac(&pts, &RansacParams::default()).unwrap();
        prop_assert_eq!(fit.inlier_count, n);
        prop_assert!(fit.residual < 1e-12);
        prop_assert!((fit.ray.direction.dot(d).abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn line_fit_is_rigidly_equivariant(
        pts in prop::collection::vec(vec3(0.1), 3..9),
        rot in rotation(),
        shift in vec3(1.0),
    ) {
        let params = RansacParams { inlier_threshold: 0.05, ..RansacParams::default() };
        let a = fit_line_ransac(&pts, &params);
        prop_assume!(a.is_ok());
        let a = a.unwrap();
        let moved: Vec<Vec3> = pts.iter().map(|p| rot * *p + shift).collect();
        let b = fit_line_ransac(&moved, &params).unwrap();
        let ad = rot * a.ray.direction;
        prop_assert!(b.residual < params.inlier_threshold * pts.len() as f64);
        if a.inliers == b.inliers {
            prop_assert!((ad.dot(b.ray.direction).abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn perturbed_rotations_rejected(rot in rotation(), i in 0usize..9, e in 1e-5..0.1f64) {
        let mut m = rot.rows();
        m[i / 3][i % 3] += e;
        prop_assert!(Rotation3::from_rows(m).is_err());
        prop_assert!(Rotation3::from_rows(rot.rows()).is_ok());
    }

    #[test]
    fn ray_hit_is_a_valid_cell(seed in any::<u64>(), o in vec3(0.3), target in vec3(0.4)) {
        let spec = SceneSpec {
            primitives: vec![
                Primitive::Plane { point: Vec3::new(0.0, 0.0, 2.0), normal: Vec3::new(0.1, 0.2, -1.0) },
                Primitive::Sphere { center: Vec3::new(0.1, 0.0, 1.2), radius: 0.2 },
            ],
            intrinsics: k(),
            seed,
            depth_noise: 0.01,
        };
        let scene = render_depth(&spec).unwrap();
        let ray = Ray::new(o, target + Vec3::new(0.0, 0.0, 1.5) - o).unwrap();
        let a = intersect_ray_depth(&ray, &scene, 0.02, 0.0);
        let b = intersect_ray_depth(&ray, &scene, 0.02, 0.0);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        if let Ok(hit) = a {
            let (c, r) = hit.cell;
            let d = scene.depth_at(c, r).unwrap();
            let p = backproject(PixelPoint::new(c as f64, r as f64), d, scene.intrinsics()).unwrap();
            prop_assert_eq!(p, hit.point);
            prop_assert!(ray.distance_to_line(p) < 0.02);
        }
    }

    #[test]
    fn crop_always_inside(u in -50.0..150.0f64, v in -50.0..150.0f64, size in 1u32..60, w in 60u32..120, h in 60u32..100) {
        let c = crop_region(PixelPoint::new(u, v), size, w, h).unwrap();
        prop_assert_eq!((c.w, c.h), (size, size));
        prop_assert!(c.u0 + c.w <= w && c.v0 + c.h <= h);
    }

    #[test]
    fn canonicalization_idempotent_and_invariant(seed in any::<u64>(), t in sim3()) {
        let g = synth_hand(seed, 0.2, None);
        let c = canonicalize(&g).unwrap();
        let cc = canonicalize(&c.to_keypoints()).unwrap();
        prop_assert!(c.max_abs_diff(&cc) < 1e-6);
        let moved = canonicalize(&t.apply_hand(&g).unwrap()).unwrap();
        prop_assert!(c.max_abs_diff(&moved) < 1e-6);
        prop_assert_eq!(c.joints[landmarks::WRIST], Vec3::ZERO);
        prop_assert!((c.joints[landmarks::INDEX_MCP] - Vec3::X).norm() < 1e-6);
        prop_assert!(c.joints[landmarks::PINKY_MCP].z.abs() < 1e-9);
        prop_assert!(c.joints[landmarks::PINKY_MCP].y > 0.0);
    }

    #[test]
    fn similarity_symmetric_and_scale_free(a in any::<u64>(), b in any::<u64>(), s in 0.01..100.0f64) {
        let ca = canonicalize(&synth_hand(a, 0.2, None)).unwrap();
        let cb = canonicalize(&synth_hand(b, 0.2, None)).unwrap();
        prop_assert_eq!(gesture_similarity(&ca, &cb).unwrap(), gesture_similarity(&cb, &ca).unwrap());
        let fa = ca.flatten();
        let scaled: Vec<f64> = fa.iter().map(|x| x * s).collect();
        prop_assert!(cosine(&fa, &scaled).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn transfer_is_argmax_and_scale_free(seed in any::<u64>(), h in 1usize..12, w in 1usize..12, s in 0.1f32..10.0) {
        let src = synth_featmap_pair(&FeaturePairSpec { h: 3, w: 4, d: 8, seed, planted: vec![], cell_px: 8 }).unwrap().src;
        let tgt = synth_featmap_pair(&FeaturePairSpec { h, w, d: 8, seed: seed ^ 1, planted: vec![], cell_px: 8 }).unwrap().src;
        let c = src.cell_center(1, 2);
        let got = transfer_contact(&src, c, &tgt, None).unwrap();
        let q: Vec<f64> = src.cell(1, 2).iter().map(|&x| x as f64).collect();
        for r in 0..h {
            for col in 0..w {
                let cell: Vec<f64> = tgt.cell(r, col).iter().map(|&x| x as f64).collect();
                prop_assert!(cosine(&q, &cell).unwrap() <= got.similarity + 1e-12);
            }
        }
        let a = transfer_contact(&src.scaled(s).unwrap(), c, &tgt, None).unwrap();
        let b = transfer_contact(&src, c, &tgt.scaled(s).unwrap(), None).unwrap();
        prop_assert_eq!(a.target_cell, got.target_cell);
        prop_assert_eq!(b.target_cell, got.target_cell);
    }

    #[test]
    fn deviation_symmetric_and_left_invariant(a in rotation(), b in rotation(), q in rotation()) {
        let d = frobenius_deviation(&a, &b);
        prop_assert!((d - frobenius_deviation(&b, &a)).abs() < 1e-12);
        prop_assert!((d - frobenius_deviation(&(q * a), &(q * b))).abs() < 1e-9);
    }

    #[test]
    fn plain_selection_is_max_score(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r_h = random_rotation(&mut rng);
        let cands = synth_candidates(&mut rng, n, Vec3::new(0.0, 0.0, 1.0), 0.1, &r_h);
        let params = SelectionParams { lambda: 0.0, sigma: 30.0, attention: AttentionMode::Off };
        let sel = select_grasp(&cands, &r_h, PixelPoint::new(40.0, 30.0), &k(), &params).unwrap();
        let best = cands.iter().map(|c| c.score).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(sel.candidate.score, best);
        let first = cands.iter().position(|c| c.score == best).unwrap();
        prop_assert_eq!(sel.index, first);
    }
}

fn copy_of(bank: &MemoryBank, i: usize) -> EntryRecord {
    let e = &bank.entries()[i];
    EntryRecord {
        id: e.id.clone(),
        gesture: e.gesture.clone(),
        embedding: e.embedding.clone(),
        features: e.features.clone(),
        image_ref: e.image_ref.clone(),
        contact: e.contact,
        category: e.category.clone(),
    }
}

#[test]
fn retrieval_ignores_bank_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..20 {
        let bank = synth_bank(&BankSpec { entries: 30, seed, grid: (1, 1, 8), ..BankSpec::default() }).unwrap().bank;
        let mut order: Vec<usize> = (0..bank.len()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut shuffled = MemoryBank::new();
        for &i in &order {
            shuffled.ingest(copy_of(&bank, i)).unwrap();
        }
        let q = &bank.entries()[seed as usize % bank.len()];
        let emb: Vec<f64> = q.embedding.iter().map(|x| x + 0.3).collect();
        let a = retrieve(&q.gesture, &emb, &bank, 5).unwrap();
        let b = retrieve(&q.gesture, &emb, &shuffled, 5).unwrap();
        assert_eq!(a.result.entry_id, b.result.entry_id);
        let ids = |r: &gestgrasp::retrieval::Retrieval| r.stage1.hits.iter().map(|h| h.entry_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a), ids(&b));
    }
}

#[test]
fn exact_copies_retrieve_themselves() {
    for seed in 0..100 {
        let bank = synth_bank(&BankSpec { entries: 20, seed, grid: (1, 1, 8), ..BankSpec::default() }).unwrap().bank;
        let e = &bank.entries()[(seed as usize * 7) % bank.len()];
        let r = retrieve(&e.gesture, &e.embedding, &bank, 5).unwrap();
        assert_eq!(r.result.entry_id, e.id);
        assert!(r.result.gesture_similarity >= 1.0 - 1e-9);
        assert!(r.result.embedding_similarity >= 1.0 - 1e-9);
    }
}

#[test]
fn validation_catches_each_mutation() {
    let base = synth_bank(&BankSpec { entries: 6, seed: 5, ..BankSpec::default() }).unwrap().bank;
    assert!(validate_bank(&base).is_clean());
    type Mutation = fn(&mut gestgrasp::memory::MemoryEntry);
    let mutations: [(&str, Mutation); 6] = [
        ("canonical", |e| e.canonical.joints[3].x += 0.1),
        ("embedding nan", |e| e.embedding[0] = f64::NAN),
        ("embedding dim", |e| e.embedding.push(1.0)),
        ("contact", |e| e.contact = PixelPoint::new(-5.0, 1.0)),
        ("image dims", |e| e.image_dims = (1, 1)),
        ("hand span", |e| {
            e.gesture = e.gesture.map_joints(|j| j * 20.0).unwrap();
        }),
    ];
    for (name, m) in mutations {
        for target in 0..base.len() {
            let mut bank = base.clone();
            m(&mut bank.entries_mut()[target]);
            let report = validate_bank(&bank);
            let id = &bank.entries()[target].id;
            assert!(report.findings.iter().any(|f| &f.entry_id == id), "{name} on {id}: {:?}", report.findings);
        }
    }
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(synth_hand(5, 0.3, None), synth_hand(5, 0.3, None));
    let a = synth_bank(&BankSpec { entries: 4, seed: 9, ..BankSpec::default() }).unwrap().bank;
    let b = synth_bank(&BankSpec { entries: 4, seed: 9, ..BankSpec::default() }).unwrap().bank;
    for (x, y) in a.entries().iter().zip(b.entries()) {
        assert_eq!(x.gesture, y.gesture);
        assert_eq!(x.embedding, y.embedding);
        assert_eq!(x.features, y.features);
    }
    let spec = SceneSpec {
        primitives: vec![Primitive::Sphere { center: Vec3::new(0.0, 0.0, 1.0), radius: 0.3 }],
        intrinsics: k(),
        seed: 3,
        depth_noise: 0.01,
    };
    assert_eq!(render_depth(&spec).unwrap(), render_depth(&spec).unwrap());
    let left = gestgrasp::synth::random_metric_hand(&mut ChaCha8Rng::seed_from_u64(1), 0.1, 0.085, Chirality::Left);
    assert!(canonicalize(&left).is_ok());
}
