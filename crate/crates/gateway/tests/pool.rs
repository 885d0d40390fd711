use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use proofbench_core::prover::{MessageSeverity, ProverStatus};
use proofbench_gateway::launcher::Launched;
use proofbench_gateway::pool::InstanceStatus;
use proofbench_gateway::{GatewayError, InProcessLauncher, InstanceState, Launcher, MockConfig, Pool, PoolConfig};

fn fast(initial: usize, max: usize) -> PoolConfig {
    PoolConfig {
        initial,
        max,
        heartbeat_interval: Duration::from_millis(200),
        check_timeout: Duration::from_secs(5),
        startup_timeout: Duration::from_secs(5),
        ..PoolConfig::default()
    }
}

async fn pool(config: PoolConfig) -> (Pool, Arc<InProcessLauncher>) {
    let launcher = Arc::new(InProcessLauncher::new(MockConfig::structural()));
    (Pool::init(config, launcher.clone()).await.unwrap(), launcher)
}

fn counts(pool: &Pool) -> Vec<usize> {
    pool.status().instances.iter().map(|i| i.active_sessions).collect()
}

fn states(pool: &Pool) -> Vec<InstanceState> {
    pool.status().instances.iter().map(|i| i.state).collect()
}

/// Fails the listed instance ids, delegates the rest.
struct Flaky {
    inner: InProcessLauncher,
    fail: HashSet<usize>,
}

#[async_trait]
impl Launcher for Flaky {
    async fn launch(&self, id: usize) -> Result<Launched, GatewayError> {
        if self.fail.contains(&id) {
            return Err(GatewayError::Launch { instance: id, reason: "scripted".into() });
        }
        self.inner.launch(id).await
    }
}

#[tokio::test]
async fn init_default_pool() {
    let (p, _) = pool(fast(2, 30)).await;
    let s = p.status();
    assert_eq!(s.instances.len(), 2);
    assert_eq!(s.healthy(), 2);
    assert!(!s.degraded);
    let (p, _) = pool(fast(1, 1)).await;
    assert_eq!(p.status().instances.len(), 1);
}

#[tokio::test]
async fn init_with_one_failed_launch_is_degraded() {
    let launcher = Arc::new(Flaky { inner: InProcessLauncher::new(MockConfig::structural()), fail: [1].into() });
    let p = Pool::init(fast(3, 30), launcher).await.unwrap();
    let s = p.status();
    assert_eq!(states(&p), [InstanceState::Healthy, InstanceState::Stopped, InstanceState::Healthy]);
    assert_eq!(s.healthy(), 2);
    assert!(s.degraded);
}

#[tokio::test]
async fn init_with_no_healthy_instance_fails() {
    let launcher = Arc::new(Flaky { inner: InProcessLauncher::new(MockConfig::structural()), fail: [0, 1].into() });
    assert!(matches!(Pool::init(fast(2, 30), launcher).await, Err(GatewayError::NoHealthyInstance)));
}

#[tokio::test]
async fn least_sessions_then_lowest_id() {
    let (p, _) = pool(fast(2, 30)).await;
    let a = p.acquire().await.unwrap();
    assert_eq!(a.instance_id, 0);
    let b = p.acquire().await.unwrap();
    assert_eq!(b.instance_id, 1);
    let c = p.acquire().await.unwrap();
    assert_eq!(c.instance_id, 0, "tie (1, 1) goes to the lowest id");
    let d = p.acquire().await.unwrap();
    assert_eq!(d.instance_id, 1);
    let e = p.acquire().await.unwrap();
    assert_eq!(e.instance_id, 0);
    p.release(&a).await;
    p.release(&c).await;
    p.release(&e).await;
    let f = p.acquire().await.unwrap();
    assert_eq!(counts(&p), [1, 2]);
    assert_eq!(f.instance_id, 0);
    let g = p.acquire().await.unwrap();
    assert_eq!(g.instance_id, 0, "counts (1, 2) pick the least loaded");
}

/// Stated policy replayed on plain counters.
fn simulate(instances: usize, acquisitions: usize) -> Vec<usize> {
    let mut c = vec![0usize; instances];
    for _ in 0..acquisitions {
        let (i, _) = c.iter().enumerate().min_by_key(|&(i, n)| (*n, i)).unwrap();
        c[i] += 1;
    }
    c
}

#[tokio::test]
async fn hundred_acquisitions_over_four() {
    let (p, _) = pool(fast(4, 30)).await;
    let mut handles = Vec::new();
    let mut chosen = Vec::new();
    for _ in 0..100 {
        let h = p.acquire().await.unwrap();
        chosen.push(h.instance_id);
        handles.push(h);
    }
    assert_eq!(counts(&p), simulate(4, 100));
    assert_eq!(counts(&p), [25, 25, 25, 25]);
    assert_eq!(&chosen[..8], [0, 1, 2, 3, 0, 1, 2, 3]);
    for h in &handles {
        p.release(h).await;
    }
    assert_eq!(counts(&p), [0, 0, 0, 0]);
}

#[tokio::test]
async fn capacity_and_double_release() {
    let (p, _) = pool(PoolConfig { session_cap: 2, ..fast(1, 1) }).await;
    let a = p.acquire().await.unwrap();
    let b = p.acquire().await.unwrap();
    assert!(matches!(p.acquire().await, Err(GatewayError::AllAtCapacity)));
    p.release(&a).await;
    p.release(&a).await;
    assert_eq!(counts(&p), [1]);
    assert!(a.is_released());
    assert!(matches!(p.check_theory(&a, "lemma \"A\" by simp", None).await, Err(GatewayError::InvalidHandle)));
    p.release(&b).await;
    assert_eq!(counts(&p), [0]);
}

#[tokio::test]
async fn structural_check_through_the_pool() {
    let (p, _) = pool(fast(2, 30)).await;
    let h = p.acquire().await.unwrap();
    assert_eq!(h.parent, "Pure");
    let text =
        "theory T imports Main begin\nlemma \"A ⟶ A\"\nproof (rule impI)\n  assume \"A\"\n  then show \"A\" .\nend";
    let r = p.check_theory(&h, text, None).await.unwrap();
    assert_eq!(r.status, ProverStatus::FinishedFailed);
    let errors: Vec<_> = r.messages.iter().filter(|m| m.severity == MessageSeverity::Error).collect();
    assert_eq!(errors.len(), 1, "{r:?}");
    let at = text.find("proof").unwrap();
    assert_eq!(errors[0].span.start, at);
    assert_eq!(&text[errors[0].span.start..errors[0].span.end], "proof");

    let ok = "theory T imports Main begin\nlemma \"A ⟶ A\"\nproof (rule impI)\n  assume \"A\"\n  then show \"A\" .\nqed\nend";
    let r = p.check_theory(&h, ok, None).await.unwrap();
    assert_eq!(r.status, ProverStatus::FinishedOk, "{r:?}");
    p.release(&h).await;
}

async fn acquire_n(p: &Pool, n: usize) -> Vec<proofbench_gateway::SessionHandle> {
    let mut v = Vec::new();
    for _ in 0..n {
        v.push(p.acquire().await.unwrap());
    }
    v
}

#[tokio::test]
async fn repeated_timeouts_mark_unhealthy() {
    let (p, launcher) = pool(PoolConfig { timeout_threshold: 3, ..fast(1, 30) }).await;
    let handles = acquire_n(&p, 3).await;
    launcher.switch(0).unwrap().set_silent(true);
    for (i, h) in handles.iter().enumerate() {
        let r = p.check_theory(h, "lemma \"A\" sorry", Some(Duration::from_millis(100))).await.unwrap();
        assert_eq!(r.status, ProverStatus::Timeout);
        let expected = if i < 2 { InstanceState::Healthy } else { InstanceState::Unhealthy };
        assert_eq!(states(&p)[0], expected);
    }
    assert!(matches!(p.acquire().await, Err(GatewayError::NoHealthyInstance)));
    for h in &handles {
        p.release(h).await;
    }
    assert_eq!(counts(&p), [0]);
}

#[tokio::test]
async fn scripted_silence_then_restart() {
    let (p, launcher) = pool(PoolConfig { heartbeat_threshold: 3, ..fast(2, 30) }).await;
    let first = launcher.switch(1).unwrap();
    first.set_silent(true);
    for sweep in 1..=3 {
        let report = p.health_sweep().await;
        assert!(report[0].responded);
        assert!(!report[1].responded);
        let expected = if sweep < 3 { InstanceState::Healthy } else { InstanceState::Unhealthy };
        assert_eq!(report[1].after, expected, "sweep {sweep}");
    }
    // Unhealthy instances are skipped by dispatch.
    let hs = acquire_n(&p, 3).await;
    assert!(hs.iter().all(|h| h.instance_id == 0));
    for h in &hs {
        p.release(h).await;
    }
    let report = p.health_sweep().await;
    assert!(report[1].restarted);
    assert_eq!(report[1].before, InstanceState::Unhealthy);
    assert_eq!(report[1].after, InstanceState::Healthy);
    assert!(!Arc::ptr_eq(&first, &launcher.switch(1).unwrap()), "a fresh instance was launched");
    assert_eq!(p.status().healthy(), 2);
    let hs = acquire_n(&p, 2).await;
    assert_eq!(hs.iter().map(|h| h.instance_id).collect::<BTreeSet<_>>(), [0, 1].into());
}

#[tokio::test]
async fn restart_failed_launch_on_sweep() {
    let launcher = Arc::new(Flaky { inner: InProcessLauncher::new(MockConfig::structural()), fail: [1].into() });
    let p = Pool::init(fast(2, 30), launcher).await.unwrap();
    let report = p.health_sweep().await;
    assert!(report[1].restarted);
    assert_eq!(report[1].after, InstanceState::Stopped, "launch keeps failing");
    assert_eq!(p.status().instances.len(), 2);
}

#[tokio::test]
async fn scaling() {
    let (p, _) = pool(fast(2, 30)).await;
    assert!(matches!(p.scale(0).await, Err(GatewayError::ScaleOutOfRange { target: 0, max: 30 })));
    assert!(matches!(p.scale(31).await, Err(GatewayError::ScaleOutOfRange { .. })));
    let up = p.scale(4).await.unwrap();
    assert_eq!(up.launched, [2, 3]);
    assert_eq!(p.status().healthy(), 4);

    let down = p.scale(2).await.unwrap();
    assert_eq!(down.stopped, [2, 3]);
    assert!(down.draining.is_empty());
    let ids: Vec<usize> = p.status().instances.iter().map(|i| i.id).collect();
    assert_eq!(ids, [0, 1]);
}

#[tokio::test]
async fn scale_down_drains_busy_instances() {
    let (p, _) = pool(fast(4, 30)).await;
    let hs = acquire_n(&p, 4).await;
    let down = p.scale(2).await.unwrap();
    assert_eq!(down.draining, [2, 3]);
    assert!(down.stopped.is_empty());
    let status = p.status();
    let draining_ids: Vec<usize> =
        status.instances.iter().filter(|i| i.draining).map(|i: &InstanceStatus| i.id).collect();
    assert_eq!(draining_ids, [2, 3]);
    // Draining instances receive nothing new.
    let extra = acquire_n(&p, 4).await;
    assert!(extra.iter().all(|h| h.instance_id < 2));
    // The draining instances stop once their last session is released.
    p.release(&hs[2]).await;
    assert_eq!(p.status().instances.len(), 3);
    p.release(&hs[3]).await;
    assert_eq!(p.status().instances.iter().map(|i| i.id).collect::<Vec<_>>(), [0, 1]);
    // Scaling up again while nothing drains launches fresh ids.
    for h in hs.iter().take(2).chain(&extra) {
        p.release(h).await;
    }
    assert_eq!(p.scale(3).await.unwrap().launched, [2]);
}

#[tokio::test]
async fn scale_up_resumes_draining_first() {
    let (p, _) = pool(fast(3, 30)).await;
    let hs = acquire_n(&p, 3).await;
    assert_eq!(p.scale(2).await.unwrap().draining, [2]);
    let up = p.scale(4).await.unwrap();
    assert_eq!(up.resumed, [2]);
    assert_eq!(up.launched, [3]);
    for h in &hs {
        p.release(h).await;
    }
    assert_eq!(p.status().instances.len(), 4);
}

#[tokio::test]
async fn stale_handle_after_restart_does_not_touch_counts() {
    let (p, launcher) = pool(PoolConfig { timeout_threshold: 1, ..fast(1, 30) }).await;
    let h = p.acquire().await.unwrap();
    launcher.switch(0).unwrap().set_silent(true);
    let r = p.check_theory(&h, "lemma \"A\" sorry", Some(Duration::from_millis(50))).await.unwrap();
    assert_eq!(r.status, ProverStatus::Timeout);
    assert_eq!(states(&p), [InstanceState::Unhealthy]);
    p.health_sweep().await;
    assert_eq!(states(&p), [InstanceState::Healthy]);
    let fresh = p.acquire().await.unwrap();
    p.release(&h).await;
    assert_eq!(counts(&p), [1], "the old lease belonged to the previous launch");
    p.release(&fresh).await;
    assert_eq!(counts(&p), [0]);
}

mod storm {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Interleaved acquire/release from many tasks: counts stay within
        /// [0, cap] at every observation and sum to the number of live leases.
        #[test]
        fn acquire_release_storm(
            instances in 1usize..5,
            cap in 1usize..6,
            plans in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 1..12), 2..10),
        ) {
            let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
            rt.block_on(async move {
                let (p, _) = pool(PoolConfig { session_cap: cap, ..fast(instances, 30) }).await;
                let p = Arc::new(p);
                let mut tasks = Vec::new();
                for plan in plans {
                    let p = p.clone();
                    tasks.push(tokio::spawn(async move {
                        let mut held = Vec::new();
                        for acquire in plan {
                            if acquire {
                                match p.acquire().await {
                                    Ok(h) => held.push(h),
                                    Err(GatewayError::AllAtCapacity) => {}
                                    Err(e) => panic!("unexpected {e}"),
                                }
                            } else if let Some(h) = held.pop() {
                                p.release(&h).await;
                            }
                            for i in p.status().instances {
                                assert!(i.active_sessions <= cap);
                            }
                            tokio::task::yield_now().await;
                        }
                        held
                    }));
                }
                let mut live = Vec::new();
                for t in tasks {
                    live.extend(t.await.unwrap());
                }
                assert_eq!(p.status().total_active(), live.len());
                for h in &live {
                    p.release(h).await;
                }
                assert_eq!(p.status().total_active(), 0);
            });
        }
    }
}
