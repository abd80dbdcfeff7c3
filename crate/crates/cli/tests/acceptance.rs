//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cheri_core::interp::{parse_program, Expr, Instr, RunConfig, RunOutcome, Value};
use cheri_core::sepalg::{compose, disjoint, PartialMonoid};
use cheri_core::{
    ActionExec, BlockId, BlockState, CapErr, CapSize, Capability, CheriType, CheriValue, Heap,
    IntValue, LogicErr, MemError, MemResult, Metadata, Perms,
};
use cheri_oracle::gen::{random_sequence, Gen};
use cheri_oracle::RefHeap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIZES: [CapSize; 2] = [CapSize::Bytes16, CapSize::Bytes32];

type Check = Result<String, String>;
type Criterion = Box<dyn FnMut(&mut ChaCha8Rng) -> Check>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus")).join(format!("{name}.gilc"))
}

fn corpus_source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn corpus_names() -> Vec<String> {
    let dir = corpus_path("x").parent().unwrap().to_path_buf();
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "gilc"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn run_corpus(name: &str, cap_size: CapSize) -> (i32, Option<cheri_core::interp::RunReport>) {
    let config = RunConfig {
        cap_size,
        ..RunConfig::default()
    };
    let (mut out, mut err) = (Vec::new(), Vec::new());
    cheri_cli::run_source(&corpus_source(name), name, &config, &mut out, &mut err).unwrap()
}

fn cap_err(e: CapErr) -> MemError {
    MemError::Cap(e)
}

fn logic_err(e: LogicErr) -> MemError {
    MemError::Logic(e)
}

// ---------------------------------------------------------------------------
// error table

fn table_of_errors() -> Check {
    let table = [
        ("listing_1", cap_err(CapErr::TagViolation)),
        ("buffer_overflow", cap_err(CapErr::LengthViolation)),
        ("misaligned_ptr", cap_err(CapErr::TagViolation)),
        ("dangling_ptr", logic_err(LogicErr::UseAfterFree)),
        ("double_free", logic_err(LogicErr::UseAfterFree)),
        ("invalid_free", logic_err(LogicErr::InvalidFree)),
    ];
    let mut slowest = Duration::ZERO;
    for cap_size in SIZES {
        for (name, want) in table {
            let t = Instant::now();
            let (_, report) = run_corpus(name, cap_size);
            let dt = t.elapsed();
            slowest = slowest.max(dt);
            let outcome = report
                .ok_or_else(|| format!("{name} failed to parse"))?
                .outcome;
            match outcome {
                RunOutcome::Faulted { err, .. } if err == want => {}
                other => {
                    return Err(format!(
                        "{name} at {cap_size}: expected {want}, got {other}"
                    ))
                }
            }
            ensure!(dt < Duration::from_secs(1), "{name} took {dt:?}");
        }
    }
    Ok(format!("6 programs x 2 cap sizes, slowest run {slowest:?}"))
}

// ---------------------------------------------------------------------------
// the two-memcpy listing

fn listing_end_to_end() -> Check {
    let source = corpus_source("listing_1");
    let program = parse_program(&source).map_err(|e| e.to_string())?;
    let deref = program
        .instrs
        .iter()
        .position(
            |i| matches!(i, Instr::Load(x, CheriType::S32, Expr::Var(p)) if x == "x" && p == "p"),
        )
        .ok_or("no `x := load s32 p` in listing")?;
    for cap_size in SIZES {
        let (code, report) = run_corpus("listing_1", cap_size);
        let report = report.unwrap();
        ensure!(code == cheri_cli::EXIT_CAP_ERR, "exit code {code}");
        ensure!(
            report.outcome
                == RunOutcome::Faulted {
                    pc: deref,
                    err: cap_err(CapErr::TagViolation)
                },
            "{cap_size}: {}",
            report.outcome
        );
        let (Some(Value::Cap(p)), Some(Value::Cap(n))) =
            (report.state.get("p"), report.state.get("n"))
        else {
            return Err("p or n is not a capability".into());
        };
        ensure!(p.mcap == n.mcap, "p = {p}, n = {n}");
        ensure!(!p.tag && n.tag, "tags p={} n={}", p.tag, n.tag);
    }
    Ok(format!(
        "TagViolation at pc={deref}; p has n's address and bounds with tag cleared"
    ))
}

// ---------------------------------------------------------------------------
// memcpy tag matrix

struct CopyCase {
    name: &'static str,
    src_off: i64,
    dst_off: i64,
    /// Bytes copied, relative to the capability size.
    n: fn(u64) -> u64,
    tag: bool,
}

fn memcpy_tag_matrix() -> Check {
    let cases = [
        CopyCase {
            name: "aligned->aligned",
            src_off: 0,
            dst_off: 0,
            n: |c| c,
            tag: true,
        },
        CopyCase {
            name: "aligned->misaligned",
            src_off: 0,
            dst_off: 1,
            n: |c| c,
            tag: false,
        },
        CopyCase {
            name: "misaligned->aligned",
            src_off: 1,
            dst_off: 0,
            n: |c| c,
            tag: false,
        },
        CopyCase {
            name: "misaligned->misaligned",
            src_off: 1,
            dst_off: 1,
            n: |c| c,
            tag: false,
        },
        CopyCase {
            name: "misaligned->misaligned (other phase)",
            src_off: 1,
            dst_off: 2,
            n: |c| c,
            tag: false,
        },
        CopyCase {
            name: "partial head",
            src_off: 1,
            dst_off: 1,
            n: |c| c - 1,
            tag: false,
        },
        CopyCase {
            name: "partial tail",
            src_off: 0,
            dst_off: 0,
            n: |c| c - 1,
            tag: false,
        },
    ];
    let mut checked = 0;
    for cap_size in SIZES {
        let cs = cap_size.bytes();
        for case in &cases {
            let mut h = Heap::new(cap_size);
            let target = h.alloc(4);
            let src = h.alloc(3 * cs);
            let dst = h.alloc(3 * cs);
            // tagged capabilities in every slot of both regions
            for k in 0..3 {
                h.store(&src.arith((k * cs) as i64), &CheriValue::Cap(target))
                    .unwrap();
                h.store(&dst.arith((k * cs) as i64), &CheriValue::Cap(target))
                    .unwrap();
            }
            let n = (case.n)(cs);
            let s = case.src_off + cs as i64;
            let d = case.dst_off + cs as i64;
            h.memcpy(&dst.arith(d), &src.arith(s), n)
                .map_err(|e| format!("{}: {e}", case.name))?;
            ensure!(h.wf(), "{}: heap not well formed", case.name);
            // the slot the copy lands in
            let slot = cs;
            let tag = h.tag_at(dst.block(), slot).unwrap_or(false);
            ensure!(tag == case.tag, "{} at {cap_size}: tag {tag}", case.name);
            let loaded = h.load(&dst.arith(slot as i64), CheriType::Cap).unwrap();
            let want_tag = case.tag;
            match loaded {
                CheriValue::Cap(c) => {
                    ensure!(c.tag == want_tag, "{}: loaded tag {}", case.name, c.tag)
                }
                CheriValue::Undef => ensure!(!want_tag, "{}: loaded undef", case.name),
                other => return Err(format!("{}: loaded {other}", case.name)),
            }
            // bytes outside the copy window are untouched
            for off in (0..d as u64).chain(d as u64 + n..3 * cs) {
                let untouched = h.cell_at(dst.block(), off)
                    == Some(&cheri_core::MemCell::CapFrag(
                        target.mcap,
                        (off % cs) as u32,
                    ));
                ensure!(
                    untouched,
                    "{}: byte {off} outside the copy changed",
                    case.name
                );
            }
            checked += 1;
        }
        for name in [
            "memcpy_aligned_aligned",
            "memcpy_aligned_misaligned",
            "memcpy_misaligned_aligned",
            "memcpy_misaligned_misaligned",
            "memcpy_partial_head",
            "memcpy_partial_tail",
            "libc_memcpy",
        ] {
            let (code, report) = run_corpus(name, cap_size);
            ensure!(
                code == 0,
                "{name} at {cap_size}: {}",
                report.map(|r| r.outcome.to_string()).unwrap_or_default()
            );
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} heap-level and program-level cases over both cap sizes"
    ))
}

// ---------------------------------------------------------------------------
// check order

fn load_check_order() -> Check {
    let mut n = 0;
    for cap_size in SIZES {
        let cs = cap_size.bytes();
        for bits in 0u8..16 {
            let [tag_ok, perm_ok, bounds_ok, align_ok] = [0, 1, 2, 3].map(|i| bits >> i & 1 == 1);
            let mut h = Heap::new(cap_size);
            let c = h.alloc(4 * cs);
            let off = match (bounds_ok, align_ok) {
                (true, true) => cs,
                (true, false) => cs + 1,
                (false, true) => 4 * cs,
                (false, false) => 3 * cs + 1,
            };
            let mut p = c.arith(off as i64);
            if !perm_ok {
                p = p.perms_and(Perms::all() - Perms::LOAD);
            }
            if !tag_ok {
                p = p.tag_clear();
            }
            let want: MemResult<CheriValue> = if !tag_ok {
                Err(cap_err(CapErr::TagViolation))
            } else if !perm_ok {
                Err(cap_err(CapErr::PermitLoadViolation))
            } else if !bounds_ok {
                Err(cap_err(CapErr::LengthViolation))
            } else if !align_ok {
                Err(logic_err(LogicErr::Unaligned))
            } else {
                Ok(CheriValue::Undef)
            };
            let got = h.load(&p, CheriType::Cap);
            ensure!(
                got == want,
                "load {bits:04b} at {cap_size}: got {got:?}, want {want:?}"
            );
            // the reference model agrees too
            let mut r = RefHeap::new(cap_size);
            r.alloc(4 * cs);
            ensure!(
                r.load(&p, CheriType::Cap) == want,
                "reference disagrees on load {bits:04b}"
            );
            n += 1;
        }
    }
    Ok(format!(
        "{n}/{n} load combinations (tag, LOAD, bounds, alignment)"
    ))
}

fn store_check_order() -> Check {
    let mut n = 0;
    for cap_size in SIZES {
        let cs = cap_size.bytes();
        for bits in 0u8..32 {
            let [tag_ok, store_ok, cap_store_ok, bounds_ok, align_ok] =
                [0, 1, 2, 3, 4].map(|i| bits >> i & 1 == 1);
            let mut h = Heap::new(cap_size);
            let target = h.alloc(4);
            let c = h.alloc(4 * cs);
            let off = match (bounds_ok, align_ok) {
                (true, true) => cs,
                (true, false) => cs + 1,
                (false, true) => 4 * cs,
                (false, false) => 3 * cs + 1,
            };
            let mut p = c.arith(off as i64);
            if !store_ok {
                p = p.perms_and(Perms::all() - Perms::STORE);
            }
            if !cap_store_ok {
                p = p.perms_and(Perms::all() - Perms::CAP_STORE);
            }
            if !tag_ok {
                p = p.tag_clear();
            }
            let want: MemResult<()> = if !tag_ok {
                Err(cap_err(CapErr::TagViolation))
            } else if !store_ok {
                Err(cap_err(CapErr::PermitStoreViolation))
            } else if !cap_store_ok {
                Err(cap_err(CapErr::PermitStoreCapViolation))
            } else if !bounds_ok {
                Err(cap_err(CapErr::LengthViolation))
            } else if !align_ok {
                Err(logic_err(LogicErr::Unaligned))
            } else {
                Ok(())
            };
            let before = h.clone();
            let got = h.store(&p, &CheriValue::Cap(target));
            ensure!(
                got == want,
                "store {bits:05b} at {cap_size}: got {got:?}, want {want:?}"
            );
            if got.is_err() {
                ensure!(h == before, "failed store {bits:05b} changed the heap");
            }
            n += 1;
        }
    }
    Ok(format!(
        "{n}/{n} store combinations (tag, STORE, CAP_STORE, bounds, alignment)"
    ))
}

// ---------------------------------------------------------------------------
// good-variable laws

const LAW_CASES: usize = 10_000;

/// A heap in some random reachable state.
fn random_heap(rng: &mut ChaCha8Rng, cap_size: CapSize, max_len: usize) -> Heap {
    let len = rng.gen_range(0..=max_len);
    let (_, seq) = random_sequence(rng, cap_size, len);
    let mut h = Heap::new(cap_size);
    h.exec_all(&seq);
    h
}

fn random_int(rng: &mut ChaCha8Rng) -> IntValue {
    let ty = *CheriType::PRIMITIVES.choose(rng).unwrap();
    IntValue::wrapping(ty, rng.gen()).unwrap()
}

/// A type and an in-bounds, suitably aligned offset into a block of `n`
/// bytes, if any type fits.
fn fitting_access(rng: &mut ChaCha8Rng, cap_size: CapSize, n: u64) -> Option<(CheriType, i64)> {
    let fits: Vec<CheriType> = CheriType::ALL
        .into_iter()
        .filter(|t| t.size_of(cap_size) <= n)
        .collect();
    let ty = *fits.choose(rng)?;
    let size = ty.size_of(cap_size);
    let off = if ty == CheriType::Cap {
        rng.gen_range(0..=(n - size) / cap_size.bytes()) * cap_size.bytes()
    } else {
        rng.gen_range(0..=n - size)
    };
    Some((ty, off as i64))
}

fn law_load_after_alloc(rng: &mut ChaCha8Rng) -> Check {
    for i in 0..LAW_CASES {
        let cap_size = *SIZES.choose(rng).unwrap();
        let mut h = random_heap(rng, cap_size, 20);
        let n = rng.gen_range(1..=4 * cap_size.bytes());
        let c = h.alloc(n);
        let (ty, off) = fitting_access(rng, cap_size, n).unwrap();
        let got = h.load(&c.arith(off), ty);
        ensure!(
            got == Ok(CheriValue::Undef),
            "case {i}: load {ty} at {off} of fresh {n} -> {got:?}"
        );
    }
    Ok(format!("{LAW_CASES} cases"))
}

fn law_load_after_free(rng: &mut ChaCha8Rng) -> Check {
    for i in 0..LAW_CASES {
        let cap_size = *SIZES.choose(rng).unwrap();
        let mut h = random_heap(rng, cap_size, 20);
        let n = rng.gen_range(1..=4 * cap_size.bytes());
        let c = h.alloc(n);
        if n >= 8 && rng.gen_bool(0.5) {
            h.store(&c, &CheriValue::Int(random_int(rng))).unwrap();
        }
        h.free(&c)
            .map_err(|e| format!("case {i}: free failed: {e}"))?;
        let (ty, off) = fitting_access(rng, cap_size, n).unwrap();
        let got = h.load(&c.arith(off), ty);
        ensure!(
            got == Err(logic_err(LogicErr::UseAfterFree)),
            "case {i}: load after free -> {got:?}"
        );
    }
    Ok(format!("{LAW_CASES} cases"))
}

fn law_primitive_roundtrip(rng: &mut ChaCha8Rng) -> Check {
    for i in 0..LAW_CASES {
        let cap_size = *SIZES.choose(rng).unwrap();
        let mut h = random_heap(rng, cap_size, 20);
        let n = rng.gen_range(8..=4 * cap_size.bytes());
        let c = h.alloc(n);
        // pre-existing contents at the target
        if rng.gen_bool(0.3) {
            let t = h.alloc(1);
            h.store(&c, &CheriValue::Cap(t)).ok();
        }
        let v = random_int(rng);
        let off = rng.gen_range(0..=n - v.ty().size_of(cap_size)) as i64;
        let p = c.arith(off).perms_and(Perms::LOAD | Perms::STORE);
        h.store(&p, &CheriValue::Int(v))
            .map_err(|e| format!("case {i}: store failed: {e}"))?;
        let got = h.load(&p, v.ty());
        ensure!(
            got == Ok(CheriValue::Int(v)),
            "case {i}: stored {v:?} at {off}, loaded {got:?}"
        );
    }
    Ok(format!("{LAW_CASES} cases"))
}

fn law_capability_roundtrip(rng: &mut ChaCha8Rng) -> Check {
    let mut kept = 0;
    let mut refused = 0;
    for i in 0..LAW_CASES {
        let cap_size = *SIZES.choose(rng).unwrap();
        let mut h = random_heap(rng, cap_size, 20);
        let slots = rng.gen_range(1..=3);
        let c = h.alloc(slots * cap_size.bytes());
        let target = h.alloc(rng.gen_range(1..64));
        let mut v = target.arith(rng.gen_range(-8..72));
        if rng.gen_bool(0.3) {
            v = v.perms_and(Perms::from_bits_truncate(rng.gen_range(0..16)));
        }
        if rng.gen_bool(0.3) {
            v = v.tag_clear();
        }
        let off = (rng.gen_range(0..slots) * cap_size.bytes()) as i64;
        let mut s = c.arith(off);
        if rng.gen_bool(0.3) {
            s = s.perms_and(Perms::all() - Perms::CAP_STORE);
        }
        let stored = h.store(&s, &CheriValue::Cap(v));
        if v.tag && !s.perms().contains(Perms::CAP_STORE) {
            ensure!(
                stored == Err(cap_err(CapErr::PermitStoreCapViolation)),
                "case {i}: tagged store without CAP_STORE -> {stored:?}"
            );
            refused += 1;
            continue;
        }
        stored.map_err(|e| format!("case {i}: store failed: {e}"))?;
        let mut l = c.arith(off);
        if rng.gen_bool(0.5) {
            l = l.perms_and(Perms::LOAD | Perms::from_bits_truncate(rng.gen_range(0..16)));
        }
        let want_tag = v.tag && l.perms().contains(Perms::CAP_LOAD);
        match h.load(&l, CheriType::Cap) {
            Ok(CheriValue::Cap(got)) => {
                ensure!(
                    got.mcap == v.mcap,
                    "case {i}: address or bounds changed: {v} -> {got}"
                );
                ensure!(
                    got.tag == want_tag,
                    "case {i}: tag {} want {want_tag}",
                    got.tag
                );
                if got == v {
                    kept += 1;
                }
            }
            other => return Err(format!("case {i}: loaded {other:?}")),
        }
    }
    Ok(format!(
        "{LAW_CASES} cases ({kept} exact, {} tag-stripped, {refused} refused without CAP_STORE)",
        LAW_CASES - kept - refused
    ))
}

fn law_non_interference(rng: &mut ChaCha8Rng) -> Check {
    for i in 0..LAW_CASES {
        let cap_size = *SIZES.choose(rng).unwrap();
        let mut g = Gen::new(cap_size);
        let mut h = Heap::new(cap_size);
        let len = rng.gen_range(0..20);
        let prefix = g.sequence(rng, len);
        h.exec_all(&prefix);
        let a = h.alloc(rng.gen_range(8..=3 * cap_size.bytes()));
        let b = h.alloc(rng.gen_range(8..=3 * cap_size.bytes()));
        g.alloc_n(a.meta().length());
        g.alloc_n(b.meta().length());
        for _ in 0..rng.gen_range(0..10) {
            let act = g.action(rng);
            let _ = h.exec(&act);
        }
        let observe = |h: &Heap| -> Vec<MemResult<CheriValue>> {
            let mut out = Vec::new();
            for id in h.blocks().keys().filter(|id| **id != a.block()) {
                for off in 0..3 * cap_size.bytes() {
                    let c = Capability::new(
                        *id,
                        off as i64,
                        Metadata::new(0, 3 * cap_size.bytes(), Perms::all()).unwrap(),
                        true,
                    );
                    out.push(h.load(&c, CheriType::U8));
                    if cap_size.is_aligned(off) {
                        out.push(h.load(&c, CheriType::Cap));
                    }
                }
            }
            out
        };
        let before = observe(&h);
        let v = if rng.gen_bool(0.5) {
            CheriValue::Int(random_int(rng))
        } else {
            CheriValue::Cap(b)
        };
        let size = v.type_of().unwrap().size_of(cap_size);
        if size > a.meta().length() {
            continue;
        }
        let max = (a.meta().length() - size) / if size == cap_size.bytes() { size } else { 1 };
        let off = rng.gen_range(0..=max) * if size == cap_size.bytes() { size } else { 1 };
        let r = h.store(&a.arith(off as i64), &v);
        if r.is_ok() {
            ensure!(
                observe(&h) == before,
                "case {i}: store to block {} changed another block",
                a.block()
            );
        }
    }
    Ok(format!("{LAW_CASES} cases"))
}

// ---------------------------------------------------------------------------
// well-formedness and the separation algebra

fn wf_preservation(rng: &mut ChaCha8Rng) -> Check {
    let (mut ok, mut failed) = (0usize, 0usize);
    for i in 0..10_000 {
        let cap_size = SIZES[i % 2];
        let len = rng.gen_range(1..=50);
        let (_, seq) = random_sequence(rng, cap_size, len);
        let mut h = Heap::new(cap_size);
        for a in &seq {
            let before = h.clone();
            match h.exec(a) {
                Ok(_) => {
                    ok += 1;
                    ensure!(h.wf(), "sequence {i}: not well formed after {a:?}");
                }
                Err(_) => {
                    failed += 1;
                    ensure!(h == before, "sequence {i}: failed {a:?} changed the heap");
                }
            }
        }
    }
    Ok(format!(
        "10000 sequences, {ok} successful and {failed} failing actions"
    ))
}

/// Splits the blocks of `h` into `k` heaps at random.
fn partition(rng: &mut ChaCha8Rng, h: &Heap, k: usize) -> Vec<Heap> {
    let mut parts: Vec<BTreeMap<BlockId, BlockState>> = vec![BTreeMap::new(); k];
    for (id, b) in h.blocks() {
        parts[rng.gen_range(0..k)].insert(*id, b.clone());
    }
    parts
        .into_iter()
        .map(|p| Heap::from_blocks(h.cap_size(), p))
        .collect()
}

/// A small change to `h`: drop a block, free a block, or overwrite a byte.
fn mutate(rng: &mut ChaCha8Rng, h: &Heap) -> Heap {
    let mut blocks = h.blocks().clone();
    let ids: Vec<BlockId> = blocks.keys().copied().collect();
    if let Some(id) = ids.choose(rng).copied() {
        match rng.gen_range(0..3) {
            0 => {
                blocks.remove(&id);
            }
            1 => {
                blocks.insert(id, BlockState::Freed);
            }
            _ => {
                if let Some(BlockState::Live(b)) = blocks.get_mut(&id) {
                    b.cells.insert(0, cheri_core::MemCell::Byte(rng.gen()));
                }
            }
        }
    }
    Heap::from_blocks(h.cap_size(), blocks)
}

fn pcm_laws(rng: &mut ChaCha8Rng) -> Check {
    let mut cancel_premises = 0;
    let mut undefined = 0;
    for i in 0..2_000 {
        let cap_size = SIZES[i % 2];
        let whole = random_heap(rng, cap_size, 40);
        let parts = partition(rng, &whole, 3);
        let (a, b, c) = (&parts[0], &parts[1], &parts[2]);

        // recomposition gives back the heap it was split from
        let ab = compose(a, b).ok_or("disjoint parts failed to compose")?;
        let abc = compose(&ab, c).ok_or("disjoint parts failed to compose")?;
        ensure!(abc == whole, "pair {i}: parts do not recompose");

        ensure!(compose(a, b) == compose(b, a), "pair {i}: not commutative");
        let bc = compose(b, c).unwrap();
        ensure!(
            compose(a, &bc) == Some(abc.clone()),
            "triple {i}: not associative"
        );
        ensure!(
            compose(a, &a.unit()) == Some(a.clone()),
            "pair {i}: unit law"
        );
        ensure!(
            compose(&a.unit(), a) == Some(a.clone()),
            "pair {i}: unit law"
        );
        ensure!(
            disjoint(a, b) == disjoint(b, a),
            "pair {i}: disjointness not symmetric"
        );

        // cancellativity: a' . b = a . b implies a' = a
        let a2 = if rng.gen_bool(0.5) {
            mutate(rng, a)
        } else {
            partition(rng, &whole, 3)[0].clone()
        };
        match compose(&a2, b) {
            Some(h) if h == ab => {
                cancel_premises += 1;
                ensure!(a2 == *a, "pair {i}: not cancellative");
            }
            None => undefined += 1,
            _ => {}
        }

        // well-formedness splits
        ensure!(
            !abc.wf() || a.wf() && b.wf() && c.wf(),
            "triple {i}: wf does not decompose"
        );

        // overlapping heaps do not compose
        let other = random_heap(rng, cap_size, 10);
        if whole
            .blocks()
            .keys()
            .any(|k| other.blocks().contains_key(k))
        {
            ensure!(
                compose(&whole, &other).is_none(),
                "pair {i}: overlapping heaps composed"
            );
            undefined += 1;
        }
    }
    Ok(format!(
        "2000 triples; cancellation premise held {cancel_premises} times, {undefined} undefined compositions"
    ))
}

// ---------------------------------------------------------------------------
// differential testing

fn differential(rng: &mut ChaCha8Rng) -> Check {
    let mut actions = 0;
    for i in 0..10_000 {
        let cap_size = SIZES[i % 2];
        let len = rng.gen_range(1..=50);
        let (g, seq) = random_sequence(rng, cap_size, len);
        let mut h = Heap::new(cap_size);
        let mut r = RefHeap::new(cap_size);
        for (k, a) in seq.iter().chain(g.sweep().iter()).enumerate() {
            let (x, y) = (h.exec(a), r.exec(a));
            ensure!(
                x == y,
                "sequence {i} step {k}: {a:?}\n  model: {x:?}\n  reference: {y:?}"
            );
            actions += 1;
        }
    }
    Ok(format!(
        "10000 sequences of length <= 50, {actions} actions including final sweeps"
    ))
}

// ---------------------------------------------------------------------------

fn corpus_time() -> Check {
    let names = corpus_names();
    let t = Instant::now();
    for cap_size in SIZES {
        for name in &names {
            let (_, report) = run_corpus(name, cap_size);
            ensure!(report.is_some(), "{name} failed to parse");
        }
    }
    let dt = t.elapsed();
    ensure!(dt < Duration::from_secs(10), "corpus took {dt:?}");
    Ok(format!("{} programs x 2 cap sizes in {dt:?}", names.len()))
}

fn main() -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c4e_41c0);
    let mut checks: Vec<(&str, Criterion)> = vec![
        ("error table reproduced", Box::new(|_| table_of_errors())),
        (
            "two-memcpy listing faults on final dereference",
            Box::new(|_| listing_end_to_end()),
        ),
        ("memcpy tag matrix", Box::new(|_| memcpy_tag_matrix())),
        ("load check order", Box::new(|_| load_check_order())),
        ("store check order", Box::new(|_| store_check_order())),
        ("load after alloc is undef", Box::new(law_load_after_alloc)),
        (
            "load after free is use-after-free",
            Box::new(law_load_after_free),
        ),
        (
            "primitive store/load round trip",
            Box::new(law_primitive_roundtrip),
        ),
        (
            "capability round trip is correct, not exact",
            Box::new(law_capability_roundtrip),
        ),
        (
            "stores do not affect other blocks",
            Box::new(law_non_interference),
        ),
        ("well-formedness preserved", Box::new(wf_preservation)),
        ("partial commutative monoid laws", Box::new(pcm_laws)),
        (
            "differential agreement with reference model",
            Box::new(differential),
        ),
        ("corpus runs under 10 s", Box::new(|_| corpus_time())),
    ];
    let mut failed = 0;
    for (name, check) in checks.iter_mut() {
        let t = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(|| check(&mut rng)))
            .unwrap_or_else(|e| Err(format!("panicked: {e:?}")));
        let dt = t.elapsed();
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.2?}]", dt),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{:.2?}]", dt);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
