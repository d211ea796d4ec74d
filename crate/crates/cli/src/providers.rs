//! Provider adapters: deterministic stubs for offline runs and an
//! OpenAI-compatible HTTP chat-completions client.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use ideograph_core::{ChatRequest, MpRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::gateway::{Provider, ProviderError, Reply};

/// Everything a provider spec may need besides its own arguments.
#[derive(Debug, Clone, Default)]
pub struct ProviderContext {
    pub records: Vec<MpRecord>,
    /// Explicit bloc → score table for `bloc-mean`; computed from the
    /// records when absent.
    pub bloc_table: Option<BTreeMap<String, f64>>,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout: Duration,
}

/// Builds a provider from a spec string:
/// `fixed:<x>`, `echo-prefix:<n>`, `bloc-mean`, `gt-plus-noise:<sigma>:<seed>`
/// or `openai`.
pub fn from_spec(spec: &str, ctx: &ProviderContext) -> Result<Arc<dyn Provider>> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match name {
        "fixed" => Arc::new(Fixed(args.to_string())),
        "echo-prefix" => Arc::new(EchoPrefix(
            args.parse()
                .with_context(|| format!("echo-prefix length in {spec:?}"))?,
        )),
        "bloc-mean" => {
            let table = match &ctx.bloc_table {
                Some(t) => t.clone(),
                None => bloc_means(&ctx.records)?,
            };
            Arc::new(BlocMean { table })
        }
        "gt-plus-noise" => {
            let (sigma, seed) = args
                .split_once(':')
                .ok_or_else(|| anyhow!("expected gt-plus-noise:<sigma>:<seed>, got {spec:?}"))?;
            let sigma: f64 = sigma
                .parse()
                .with_context(|| format!("sigma in {spec:?}"))?;
            let seed: u64 = seed.parse().with_context(|| format!("seed in {spec:?}"))?;
            Arc::new(GtPlusNoise::new(sigma, seed, &ctx.records)?)
        }
        "openai" => {
            let endpoint = ctx
                .endpoint
                .clone()
                .ok_or_else(|| anyhow!("provider openai needs an endpoint"))?;
            Arc::new(OpenAiCompatible::new(
                endpoint,
                ctx.api_key_env.clone(),
                ctx.timeout,
            ))
        }
        _ => bail!("unknown provider {spec:?}"),
    })
}

/// Mean ground truth per bloc over the scored records.
pub fn bloc_means(records: &[MpRecord]) -> Result<BTreeMap<String, f64>> {
    let model =
        ideograph_core::baseline::fit(records, ideograph_core::BaselineKind::PartyBlocMean)?;
    Ok(model.group_means)
}

/// `(name, bloc)` from the last `Name:` line of a prediction prompt.
pub fn target_line(prompt: &str) -> Option<(&str, &str)> {
    let line = prompt.lines().rev().find(|l| l.starts_with("Name: "))?;
    let rest = &line["Name: ".len()..];
    let (name, rest) = rest.split_once(", Party: ")?;
    let (_, bloc) = rest.split_once(", Bloc: ")?;
    Some((name, bloc))
}

/// Same completion for every request.
pub struct Fixed(pub String);

impl Provider for Fixed {
    fn id(&self) -> String {
        format!("fixed:{}", self.0)
    }

    fn call(&self, _: &ChatRequest) -> Result<Reply, ProviderError> {
        Ok(Reply::text(self.0.clone()))
    }
}

/// The first `n` characters of the last user message.
pub struct EchoPrefix(pub usize);

impl Provider for EchoPrefix {
    fn id(&self) -> String {
        format!("echo-prefix:{}", self.0)
    }

    fn call(&self, request: &ChatRequest) -> Result<Reply, ProviderError> {
        Ok(Reply::text(
            request
                .last_user_content()
                .chars()
                .take(self.0)
                .collect::<String>(),
        ))
    }
}

/// Answers with the mean score of the target's bloc.
pub struct BlocMean {
    pub table: BTreeMap<String, f64>,
}

impl Provider for BlocMean {
    fn id(&self) -> String {
        let canonical = serde_json::to_vec(&self.table).expect("table serializes");
        format!("bloc-mean:{}", &crate::io::sha256_hex(&canonical)[..16])
    }

    fn call(&self, request: &ChatRequest) -> Result<Reply, ProviderError> {
        let (_, bloc) = target_line(request.last_user_content())
            .ok_or_else(|| ProviderError::Api("prompt has no target line".into()))?;
        let mean = self
            .table
            .get(bloc)
            .ok_or_else(|| ProviderError::Api(format!("no mean for bloc {bloc:?}")))?;
        Ok(Reply::text(format!("{mean}")))
    }
}

/// Ground truth of the named MP plus seeded Gaussian noise. The noise for an
/// MP depends only on the seed and the name, so predictors with different
/// sigma share the same standard-normal draw.
pub struct GtPlusNoise {
    sigma: f64,
    seed: u64,
    truth: BTreeMap<String, f64>,
}

impl GtPlusNoise {
    pub fn new(sigma: f64, seed: u64, records: &[MpRecord]) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            bail!("sigma must be a finite non-negative number, got {sigma}");
        }
        let truth = records
            .iter()
            .filter_map(|r| Some((r.name.clone(), r.ground_truth?)))
            .collect();
        Ok(Self { sigma, seed, truth })
    }

    fn standard_normal(&self, name: &str) -> f64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(name.as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);
        Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng)
    }
}

impl Provider for GtPlusNoise {
    fn id(&self) -> String {
        format!("gt-plus-noise:{}:{}", self.sigma, self.seed)
    }

    fn call(&self, request: &ChatRequest) -> Result<Reply, ProviderError> {
        let (name, _) = target_line(request.last_user_content())
            .ok_or_else(|| ProviderError::Api("prompt has no target line".into()))?;
        let truth = self
            .truth
            .get(name)
            .ok_or_else(|| ProviderError::Api(format!("no ground truth for {name:?}")))?;
        let score = truth + self.sigma * self.standard_normal(name);
        Ok(Reply::text(format!("{score:.3}")))
    }
}

/// Wraps a provider, tracking how many calls are in flight at once and
/// optionally holding each call for a fixed time.
pub struct Instrumented<P> {
    inner: P,
    hold: Duration,
    current: AtomicUsize,
    peak: AtomicUsize,
    total: AtomicUsize,
}

impl<P: Provider> Instrumented<P> {
    pub fn new(inner: P, hold: Duration) -> Self {
        Self {
            inner,
            hold,
            current: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            total: AtomicUsize::new(0),
        }
    }

    pub fn peak_in_flight(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    pub fn total_calls(&self) -> usize {
        self.total.load(Ordering::SeqCst)
    }
}

impl<P: Provider> Provider for Instrumented<P> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn call(&self, request: &ChatRequest) -> Result<Reply, ProviderError> {
        let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        self.total.fetch_add(1, Ordering::SeqCst);
        if !self.hold.is_zero() {
            std::thread::sleep(self.hold);
        }
        let out = self.inner.call(request);
        self.current.fetch_sub(1, Ordering::SeqCst);
        out
    }
}

impl<P: Provider> Provider for Arc<P> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn call(&self, request: &ChatRequest) -> Result<Reply, ProviderError> {
        (**self).call(request)
    }
}

/// `POST {endpoint}/chat/completions` with an OpenAI-style body; the answer
/// is `choices[0].message.content`. The bearer token is read from the
/// configured environment variable on every call and never stored.
pub struct OpenAiCompatible {
    endpoint: String,
    api_key_env: Option<String>,
    agent: ureq::Agent,
}

impl OpenAiCompatible {
    pub fn new(endpoint: String, api_key_env: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            api_key_env,
            agent,
        }
    }

    fn body(request: &ChatRequest) -> serde_json::Value {
        let mut body = serde_json::Map::new();
        for (k, v) in &request.params {
            body.insert(k.clone(), v.clone());
        }
        body.insert("model".into(), request.model.clone().into());
        body.insert(
            "messages".into(),
            serde_json::to_value(&request.messages).expect("messages serialize"),
        );
        serde_json::Value::Object(body)
    }
}

impl Provider for OpenAiCompatible {
    fn id(&self) -> String {
        format!("openai:{}", self.endpoint)
    }

    fn call(&self, request: &ChatRequest) -> Result<Reply, ProviderError> {
        let mut req = self
            .agent
            .post(format!("{}/chat/completions", self.endpoint))
            .header("Content-Type", "application/json");
        if let Some(var) = &self.api_key_env {
            let key = std::env::var(var).map_err(|_| ProviderError::Credential(var.clone()))?;
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = req
            .send(Self::body(request).to_string())
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            let snippet: String = text.chars().take(200).collect();
            return Err(ProviderError::Api(format!("HTTP {status}: {snippet}")));
        }
        let json: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        let content = json["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| ProviderError::Malformed("missing choices[0].message.content".into()))?;
        let mut reply = Reply::text(content);
        for key in ["id", "model"] {
            if let Some(v) = json.get(key) {
                reply.provider_meta.insert(key.into(), v.clone());
            }
        }
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<MpRecord> {
        vec![
            MpRecord::new("1", "Anna Muster", "FDP", "Liberals", Some(4.0)),
            MpRecord::new("2", "Beat Keller", "SP", "Social Democrats", Some(8.5)),
            MpRecord::new("3", "Carla Weber", "FDP", "Liberals", Some(3.0)),
        ]
    }

    fn prompt(name: &str, bloc: &str) -> ChatRequest {
        ChatRequest::user(
            "m",
            format!("Name: X | Party: P | Party Bloc: Greens | Score: 9.0\nName: {name}, Party: P, Bloc: {bloc}\nScore:"),
        )
    }

    #[test]
    fn fixed_and_echo() {
        let ctx = ProviderContext::default();
        let p = from_spec("fixed:4.2", &ctx).unwrap();
        assert_eq!(p.call(&prompt("a", "b")).unwrap().text, "4.2");
        let p = from_spec("echo-prefix:5", &ctx).unwrap();
        assert_eq!(p.call(&prompt("a", "b")).unwrap().text, "Name:");
        assert!(from_spec("nope", &ctx).is_err());
        assert!(from_spec("echo-prefix:x", &ctx).is_err());
    }

    #[test]
    fn target_line_is_the_last_name_line() {
        let req = prompt("Anna Muster", "Liberals");
        assert_eq!(
            target_line(req.last_user_content()),
            Some(("Anna Muster", "Liberals"))
        );
        assert_eq!(target_line("no target"), None);
    }

    #[test]
    fn bloc_mean_answers_with_the_bloc_average() {
        let ctx = ProviderContext {
            records: records(),
            ..Default::default()
        };
        let p = from_spec("bloc-mean", &ctx).unwrap();
        assert_eq!(p.call(&prompt("Z", "Liberals")).unwrap().text, "3.5");
        assert_eq!(
            p.call(&prompt("Z", "Social Democrats")).unwrap().text,
            "8.5"
        );
        assert!(matches!(
            p.call(&prompt("Z", "Greens")),
            Err(ProviderError::Api(_))
        ));
    }

    #[test]
    fn noise_is_seeded_and_scales_with_sigma() {
        let ctx = ProviderContext {
            records: records(),
            ..Default::default()
        };
        let small = from_spec("gt-plus-noise:0.25:7", &ctx).unwrap();
        let large = from_spec("gt-plus-noise:1:7", &ctx).unwrap();
        let exact = from_spec("gt-plus-noise:0:7", &ctx).unwrap();
        let req = prompt("Anna Muster", "Liberals");
        let s: f64 = small.call(&req).unwrap().text.parse().unwrap();
        let l: f64 = large.call(&req).unwrap().text.parse().unwrap();
        assert_eq!(exact.call(&req).unwrap().text, "4.000");
        assert_eq!(
            small.call(&req).unwrap().text,
            small.call(&req).unwrap().text
        );
        assert!(((l - 4.0) - 4.0 * (s - 4.0)).abs() < 2e-3);
        assert!(from_spec("gt-plus-noise:-1:7", &ctx).is_err());
        assert!(small.call(&prompt("Nobody", "Liberals")).is_err());
    }

    #[test]
    fn missing_credential_is_reported_by_name() {
        let p = OpenAiCompatible::new(
            "http://127.0.0.1:9".into(),
            Some("IDEOGRAPH_TEST_UNSET_KEY".into()),
            Duration::from_secs(1),
        );
        match p.call(&prompt("a", "b")) {
            Err(ProviderError::Credential(v)) => assert_eq!(v, "IDEOGRAPH_TEST_UNSET_KEY"),
            other => panic!("{other:?}"),
        }
    }
}
