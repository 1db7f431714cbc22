use std::collections::VecDeque;

use super::aggregate::GlobalModel;
use crate::error::{Error, Result};
use crate::neuralnet::{predict, ParamVector};

/// Default number of foreign-channel models a node keeps.
pub const DEFAULT_REGISTRY_CAPACITY: usize = 8;

/// Per-channel models held by one node: the averaged model of the channel it
/// senses, plus up to `capacity` models learned by others on orthogonal
/// channels, evicted least-recently-used first.
#[derive(Debug, Clone)]
pub struct ChannelModelRegistry {
    sensed_channel: u32,
    home: Option<GlobalModel>,
    /// Front is least recently used.
    foreign: VecDeque<(u32, ParamVector)>,
    capacity: usize,
}

impl ChannelModelRegistry {
    pub fn new(sensed_channel: u32, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("registry capacity must be at least 1"));
        }
        Ok(ChannelModelRegistry {
            sensed_channel,
            home: None,
            foreign: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn sensed_channel(&self) -> u32 {
        self.sensed_channel
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn set_global(&mut self, model: GlobalModel) {
        self.home = Some(model);
    }

    pub fn global(&self) -> Option<&GlobalModel> {
        self.home.as_ref()
    }

    /// Stores a model for an orthogonal channel. Returns the channel evicted
    /// to make room, if any.
    pub fn register_foreign(
        &mut self,
        channel_id: u32,
        params: ParamVector,
    ) -> Result<Option<u32>> {
        if channel_id == self.sensed_channel {
            return Err(Error::invalid(format!(
                "channel {channel_id} is sensed locally; its models are averaged, not stored"
            )));
        }
        if let Some(pos) = self.foreign.iter().position(|(c, _)| *c == channel_id) {
            self.foreign.remove(pos);
        }
        let evicted = if self.foreign.len() == self.capacity {
            self.foreign.pop_front().map(|(c, _)| c)
        } else {
            None
        };
        self.foreign.push_back((channel_id, params));
        Ok(evicted)
    }

    /// Model to use for `channel_id`. Looking up a foreign channel marks it
    /// as recently used.
    pub fn model_for(&mut self, channel_id: u32) -> Option<&ParamVector> {
        if channel_id == self.sensed_channel {
            return self.home.as_ref().map(|g| &g.params);
        }
        let pos = self.foreign.iter().position(|(c, _)| *c == channel_id)?;
        let entry = self.foreign.remove(pos).unwrap();
        self.foreign.push_back(entry);
        self.foreign.back().map(|(_, p)| p)
    }

    pub fn contains(&self, channel_id: u32) -> bool {
        (channel_id == self.sensed_channel && self.home.is_some())
            || self.foreign.iter().any(|(c, _)| *c == channel_id)
    }

    /// Foreign channels from least to most recently used.
    pub fn foreign_channels(&self) -> Vec<u32> {
        self.foreign.iter().map(|(c, _)| *c).collect()
    }

    pub fn len(&self) -> usize {
        self.foreign.len() + usize::from(self.home.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Next-slot predictions on `channel_id`, using whichever model the
    /// registry holds for it.
    pub fn predict_on(&mut self, channel_id: u32, inputs: &[Vec<f64>]) -> Result<Vec<usize>> {
        let params = self
            .model_for(channel_id)
            .ok_or_else(|| Error::invalid(format!("no model stored for channel {channel_id}")))?;
        predict(params, inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{init_params, Architecture};

    fn model(seed: u64) -> ParamVector {
        init_params(Architecture::t_s(), seed).unwrap()
    }

    #[test]
    fn lookup_returns_stored_model() {
        let mut reg = ChannelModelRegistry::new(0, 4).unwrap();
        reg.register_foreign(5, model(1)).unwrap();
        assert_eq!(reg.model_for(5), Some(&model(1)));
        assert_eq!(reg.model_for(6), None);
    }

    #[test]
    fn least_recently_used_evicted() {
        let mut reg = ChannelModelRegistry::new(0, 2).unwrap();
        assert_eq!(reg.register_foreign(1, model(1)).unwrap(), None);
        assert_eq!(reg.register_foreign(2, model(2)).unwrap(), None);
        assert_eq!(reg.register_foreign(3, model(3)).unwrap(), Some(1));
        assert_eq!(reg.foreign_channels(), vec![2, 3]);

        // touching 2 makes 3 the eviction candidate
        reg.model_for(2);
        assert_eq!(reg.register_foreign(4, model(4)).unwrap(), Some(3));
        assert_eq!(reg.foreign_channels(), vec![2, 4]);
    }

    #[test]
    fn re_registering_replaces_in_place() {
        let mut reg = ChannelModelRegistry::new(0, 2).unwrap();
        reg.register_foreign(1, model(1)).unwrap();
        reg.register_foreign(2, model(2)).unwrap();
        assert_eq!(reg.register_foreign(1, model(9)).unwrap(), None);
        assert_eq!(reg.foreign_channels(), vec![2, 1]);
        assert_eq!(reg.model_for(1), Some(&model(9)));
    }

    #[test]
    fn sensed_channel_is_not_foreign() {
        let mut reg = ChannelModelRegistry::new(3, 2).unwrap();
        assert!(reg.register_foreign(3, model(1)).is_err());
        assert!(ChannelModelRegistry::new(0, 0).is_err());
    }

    #[test]
    fn home_channel_routes_to_global() {
        let mut reg = ChannelModelRegistry::new(3, 2).unwrap();
        assert!(reg.model_for(3).is_none());
        reg.set_global(GlobalModel {
            owner: 1,
            params: model(5),
            contributors: vec![1],
        });
        reg.register_foreign(4, model(6)).unwrap();
        assert_eq!(reg.model_for(3), Some(&model(5)));
        assert_eq!(reg.model_for(4), Some(&model(6)));
        assert_eq!(reg.len(), 2);
    }
}
