//! The actor-critic network: parameters, batched forward pass and
//! hand-written backward pass.

use rand::Rng;
use rayon::prelude::*;

use crate::init::orthogonal;
use crate::layers::{
    conv_backward, conv_forward, dense_backward, dense_forward, relu_in_place, relu_mask, ConvSpec,
};
use crate::real::Real;
use crate::tensor::{ParamSet, Tensor};
use crate::NnError;

/// Samples per parallel work item. Fixed so that gradient sums are
/// accumulated in the same order whatever the thread count.
pub const CHUNK: usize = 16;

pub const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
pub const ACTOR_GAIN: f64 = 0.01;
pub const CRITIC_GAIN: f64 = 1.0;

/// Number of raw actor outputs (heading, step fraction).
pub const ACTION_DIM: usize = 2;

/// Layer layout of a network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetSpec {
    pub input_channels: usize,
    pub input_size: usize,
    pub convs: Vec<ConvSpec>,
    pub hidden: usize,
}

impl NetSpec {
    /// The 75x75 observation network.
    pub fn standard() -> Self {
        Self {
            input_channels: 1,
            input_size: gather_core::sensing::IMAGE_SIZE,
            convs: vec![
                ConvSpec::new(1, 32, 8, 4),
                ConvSpec::new(32, 64, 4, 2),
                ConvSpec::new(64, 64, 3, 1),
            ],
            hidden: 512,
        }
    }

    /// A miniature network with the same structure, for gradient checks.
    pub fn tiny() -> Self {
        Self {
            input_channels: 1,
            input_size: 13,
            convs: vec![ConvSpec::new(1, 3, 4, 2), ConvSpec::new(3, 4, 3, 1)],
            hidden: 6,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_channels * self.input_size * self.input_size
    }

    /// Side length of every conv layer's input, followed by the final output size.
    pub fn sizes(&self) -> Result<Vec<usize>, NnError> {
        let mut sizes = vec![self.input_size];
        let mut channels = self.input_channels;
        for (i, c) in self.convs.iter().enumerate() {
            if c.in_channels != channels {
                return Err(NnError::Contract(format!(
                    "conv{} expects {} channels, previous layer gives {channels}",
                    i + 1,
                    c.in_channels
                )));
            }
            let last = *sizes.last().expect("non-empty");
            let next = c.output_size(last).ok_or_else(|| {
                NnError::Contract(format!("conv{} kernel larger than its {last}px input", i + 1))
            })?;
            sizes.push(next);
            channels = c.out_channels;
        }
        Ok(sizes)
    }

    /// Length of the flattened convolutional feature vector.
    pub fn feature_len(&self) -> usize {
        let sizes = self.sizes().expect("valid spec");
        let channels = self.convs.last().map_or(self.input_channels, |c| c.out_channels);
        let side = *sizes.last().expect("non-empty");
        channels * side * side
    }

    /// Parameter names in storage order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.convs.len() {
            names.push(format!("conv{}.weight", i + 1));
            names.push(format!("conv{}.bias", i + 1));
        }
        for layer in ["fc", "actor", "critic"] {
            names.push(format!("{layer}.weight"));
            names.push(format!("{layer}.bias"));
        }
        names.push("actor.log_std".into());
        names
    }

    /// Parameter shapes in storage order.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        for c in &self.convs {
            shapes.push(c.weight_shape().to_vec());
            shapes.push(vec![c.out_channels]);
        }
        let f = self.feature_len();
        shapes.push(vec![self.hidden, f]);
        shapes.push(vec![self.hidden]);
        shapes.push(vec![ACTION_DIM, self.hidden]);
        shapes.push(vec![ACTION_DIM]);
        shapes.push(vec![1, self.hidden]);
        shapes.push(vec![1]);
        shapes.push(vec![ACTION_DIM]);
        shapes
    }

    fn fc_index(&self) -> usize {
        2 * self.convs.len()
    }
}

/// Network outputs for a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct NetOutput<T> {
    /// Raw actor outputs, `[batch, 2]`, before squashing.
    pub actor: Vec<T>,
    /// Critic values, `[batch]`.
    pub value: Vec<T>,
}

#[derive(Clone, Debug)]
struct ChunkCache<T> {
    batch: usize,
    /// Per conv layer: im2col matrices and post-ReLU outputs.
    cols: Vec<Vec<T>>,
    acts: Vec<Vec<T>>,
    hidden: Vec<T>,
}

/// Intermediate values of a forward pass, consumed by [`PolicyNet::backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    version: u64,
    batch: usize,
    chunks: Vec<ChunkCache<T>>,
}

impl<T: Real> ForwardCache<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Flattened convolutional features, `[batch, feature_len]`.
    pub fn features(&self) -> Vec<T> {
        self.chunks
            .iter()
            .flat_map(|c| c.acts.last().expect("at least one conv").iter().copied())
            .collect()
    }

    /// Shared hidden layer activations, `[batch, hidden]`.
    pub fn hidden(&self) -> Vec<T> {
        self.chunks.iter().flat_map(|c| c.hidden.iter().copied()).collect()
    }
}

/// Actor-critic network with its parameters.
#[derive(Clone, Debug)]
pub struct PolicyNet<T> {
    spec: NetSpec,
    params: ParamSet<T>,
    version: u64,
}

impl<T: Real> PolicyNet<T> {
    /// Orthogonally initialized network; biases and log-stds start at zero.
    pub fn new<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Self {
        let mut net = Self::zeros(spec);
        let l = net.spec.convs.len();
        let shapes = net.spec.param_shapes();
        let gains = (0..l)
            .map(|i| (2 * i, HIDDEN_GAIN))
            .chain([
                (2 * l, HIDDEN_GAIN),
                (2 * l + 2, ACTOR_GAIN),
                (2 * l + 4, CRITIC_GAIN),
            ]);
        for (idx, gain) in gains {
            net.params.tensors[idx] = orthogonal(&shapes[idx], gain, rng);
        }
        net
    }

    /// All parameters zero.
    pub fn zeros(spec: NetSpec) -> Self {
        let params = ParamSet {
            tensors: spec.param_shapes().iter().map(|s| Tensor::zeros(s)).collect(),
        };
        Self {
            spec,
            params,
            version: 0,
        }
    }

    /// Wraps existing parameters after checking their shapes.
    pub fn from_params(spec: NetSpec, params: ParamSet<T>) -> Result<Self, NnError> {
        let shapes = spec.param_shapes();
        if params.len() != shapes.len()
            || params.tensors.iter().zip(&shapes).any(|(t, s)| t.shape() != s.as_slice())
        {
            return Err(NnError::Contract("parameter shapes do not match the spec".into()));
        }
        Ok(Self {
            spec,
            params,
            version: 0,
        })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    /// Mutable parameters. Invalidates every outstanding [`ForwardCache`].
    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        self.version += 1;
        &mut self.params
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn log_std(&self) -> &[T] {
        self.params.tensors.last().expect("log_std present").data()
    }

    pub fn cast<U: Real>(&self) -> PolicyNet<U> {
        PolicyNet {
            spec: self.spec.clone(),
            params: self.params.cast(),
            version: 0,
        }
    }

    /// Runs `batch` inputs of [`NetSpec::input_len`] values each.
    pub fn forward(&self, input: &[T], batch: usize) -> Result<(NetOutput<T>, ForwardCache<T>), NnError> {
        let in_len = self.spec.input_len();
        if input.len() != batch * in_len {
            return Err(NnError::Contract(format!(
                "expected {} input values for a batch of {batch}, got {}",
                batch * in_len,
                input.len()
            )));
        }
        let sizes = self.spec.sizes()?;
        let results: Vec<(NetOutput<T>, ChunkCache<T>)> = input
            .par_chunks(CHUNK * in_len.max(1))
            .map(|x| self.forward_chunk(x, x.len() / in_len.max(1), &sizes))
            .collect();
        let mut out = NetOutput {
            actor: Vec::with_capacity(batch * ACTION_DIM),
            value: Vec::with_capacity(batch),
        };
        let mut chunks = Vec::with_capacity(results.len());
        for (o, c) in results {
            out.actor.extend(o.actor);
            out.value.extend(o.value);
            chunks.push(c);
        }
        let cache = ForwardCache {
            version: self.version,
            batch,
            chunks,
        };
        Ok((out, cache))
    }

    /// Forward pass without keeping intermediates.
    pub fn infer(&self, input: &[T], batch: usize) -> Result<NetOutput<T>, NnError> {
        self.forward(input, batch).map(|(o, _)| o)
    }

    fn forward_chunk(&self, x: &[T], batch: usize, sizes: &[usize]) -> (NetOutput<T>, ChunkCache<T>) {
        let p = &self.params.tensors;
        let mut cols = Vec::with_capacity(self.spec.convs.len());
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.spec.convs.len());
        for (i, spec) in self.spec.convs.iter().enumerate() {
            let input = if i == 0 { x } else { &acts[i - 1] };
            let mut o = conv_forward(spec, p[2 * i].data(), p[2 * i + 1].data(), input, batch, sizes[i]);
            relu_in_place(&mut o.y);
            cols.push(o.cols);
            acts.push(o.y);
        }
        let f = self.spec.feature_len();
        let h = self.spec.hidden;
        let fc = self.spec.fc_index();
        let features = acts.last().expect("at least one conv");
        let mut hidden = dense_forward(p[fc].data(), p[fc + 1].data(), features, batch, f, h);
        relu_in_place(&mut hidden);
        let actor = dense_forward(p[fc + 2].data(), p[fc + 3].data(), &hidden, batch, h, ACTION_DIM);
        let value = dense_forward(p[fc + 4].data(), p[fc + 5].data(), &hidden, batch, h, 1);
        (
            NetOutput { actor, value },
            ChunkCache {
                batch,
                cols,
                acts,
                hidden,
            },
        )
    }

    /// Gradients of a scalar loss given its derivatives with respect to the
    /// raw actor outputs `[batch, 2]`, the values `[batch]` and the two
    /// log-stds.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        d_actor: &[T],
        d_value: &[T],
        d_log_std: &[T],
    ) -> Result<ParamSet<T>, NnError> {
        if cache.version != self.version {
            return Err(NnError::Contract(
                "forward cache is stale: parameters changed since the forward pass".into(),
            ));
        }
        let b = cache.batch;
        if d_actor.len() != b * ACTION_DIM || d_value.len() != b || d_log_std.len() != ACTION_DIM {
            return Err(NnError::Contract("output gradient lengths do not match the batch".into()));
        }
        let sizes = self.spec.sizes()?;
        let mut offsets = Vec::with_capacity(cache.chunks.len());
        let mut start = 0;
        for c in &cache.chunks {
            offsets.push(start);
            start += c.batch;
        }
        let grads: Vec<ParamSet<T>> = cache
            .chunks
            .par_iter()
            .zip(offsets.par_iter())
            .map(|(c, &s)| {
                self.backward_chunk(
                    c,
                    &d_actor[s * ACTION_DIM..(s + c.batch) * ACTION_DIM],
                    &d_value[s..s + c.batch],
                    &sizes,
                )
            })
            .collect();
        let mut total = ParamSet::zeros_like(&self.params);
        for g in &grads {
            total.add_assign(g);
        }
        let last = total.tensors.len() - 1;
        for (g, d) in total.tensors[last].data_mut().iter_mut().zip(d_log_std) {
            *g += *d;
        }
        Ok(total)
    }

    fn backward_chunk(&self, c: &ChunkCache<T>, d_actor: &[T], d_value: &[T], sizes: &[usize]) -> ParamSet<T> {
        let p = &self.params.tensors;
        let mut g = ParamSet::zeros_like(&self.params);
        let batch = c.batch;
        let f = self.spec.feature_len();
        let h = self.spec.hidden;
        let fc = self.spec.fc_index();

        let (head, tail) = g.tensors.split_at_mut(fc + 4);
        let (cw, cb) = tail.split_at_mut(1);
        let mut d_hidden = dense_backward(
            p[fc + 4].data(),
            &c.hidden,
            d_value,
            batch,
            h,
            1,
            cw[0].data_mut(),
            cb[0].data_mut(),
        );
        let (before, actor) = head.split_at_mut(fc + 2);
        let (aw, ab) = actor.split_at_mut(1);
        let d_from_actor = dense_backward(
            p[fc + 2].data(),
            &c.hidden,
            d_actor,
            batch,
            h,
            ACTION_DIM,
            aw[0].data_mut(),
            ab[0].data_mut(),
        );
        for (a, b) in d_hidden.iter_mut().zip(&d_from_actor) {
            *a += *b;
        }
        relu_mask(&c.hidden, &mut d_hidden);

        let (convs, fcs) = before.split_at_mut(fc);
        let (fw, fb) = fcs.split_at_mut(1);
        let features = c.acts.last().expect("at least one conv");
        let mut d = dense_backward(
            p[fc].data(),
            features,
            &d_hidden,
            batch,
            f,
            h,
            fw[0].data_mut(),
            fb[0].data_mut(),
        );
        for i in (0..self.spec.convs.len()).rev() {
            relu_mask(&c.acts[i], &mut d);
            let (w, b) = convs[2 * i..2 * i + 2].split_at_mut(1);
            let dx = conv_backward(
                &self.spec.convs[i],
                p[2 * i].data(),
                &c.cols[i],
                &d,
                batch,
                sizes[i],
                w[0].data_mut(),
                b[0].data_mut(),
                i > 0,
            );
            match dx {
                Some(dx) => d = dx,
                None => break,
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standard_spec_shapes() {
        let spec = NetSpec::standard();
        assert_eq!(spec.sizes().unwrap(), vec![75, 17, 7, 5]);
        assert_eq!(spec.feature_len(), 1600);
        let names = spec.param_names();
        assert_eq!(names.len(), spec.param_shapes().len());
        assert_eq!(names[0], "conv1.weight");
        assert_eq!(names.last().unwrap(), "actor.log_std");
        assert_eq!(spec.param_shapes()[6], vec![512, 1600]);
    }

    #[test]
    fn bad_specs_are_rejected() {
        let mut spec = NetSpec::tiny();
        spec.convs[1].in_channels = 7;
        assert!(spec.sizes().is_err());
        let mut spec = NetSpec::tiny();
        spec.input_size = 3;
        assert!(spec.sizes().is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = PolicyNet::<f32>::zeros(NetSpec::standard());
        let x = vec![1.0f32; 3 * net.spec().input_len()];
        let out = net.infer(&x, 3).unwrap();
        assert!(out.actor.iter().chain(&out.value).all(|&v| v == 0.0));
    }

    #[test]
    fn init_gives_zero_biases_and_log_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = PolicyNet::<f32>::new(NetSpec::standard(), &mut rng);
        for (name, t) in net.spec().param_names().iter().zip(&net.params().tensors) {
            if name.ends_with("bias") || name.ends_with("log_std") {
                assert!(t.data().iter().all(|&v| v == 0.0), "{name}");
            } else {
                assert!(t.data().iter().any(|&v| v != 0.0), "{name}");
            }
        }
    }

    #[test]
    fn batch_results_do_not_depend_on_batching() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = PolicyNet::<f64>::new(NetSpec::tiny(), &mut rng);
        let n = 37;
        let len = net.spec().input_len();
        let x: Vec<f64> = (0..n * len).map(|_| rng.random_range(0.0..1.0)).collect();
        let all = net.infer(&x, n).unwrap();
        for s in 0..n {
            let one = net.infer(&x[s * len..(s + 1) * len], 1).unwrap();
            assert_eq!(one.value[0], all.value[s]);
            assert_eq!(one.actor[..], all.actor[s * 2..s * 2 + 2]);
        }
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = PolicyNet::<f64>::new(NetSpec::tiny(), &mut rng);
        let x = vec![0.5; net.spec().input_len()];
        let (_, cache) = net.forward(&x, 1).unwrap();
        net.params_mut().tensors[0].data_mut()[0] += 1.0;
        assert!(net.backward(&cache, &[1.0, 1.0], &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let net = PolicyNet::<f32>::zeros(NetSpec::tiny());
        assert!(net.infer(&[0.0; 5], 1).is_err());
    }
}
