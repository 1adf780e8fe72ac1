//! Controllers: task-space action mapping, the composite state machine, the
//! rule-based phase controllers, strategy switching and playable agents.
pub mod agents;
pub mod airhockit;
pub mod ensemble;
pub mod rl3;
pub mod task_action;

use thiserror::Error;

pub use agents::{make_agent, Agent, AgentContext, AgentError, AGENT_NAMES};
pub use airhockit::{ah_condition, ah_step, AhConditionParams, AhInputs, AhState, AhStateMachine, Skill, AH_EDGES};
pub use ensemble::{ensemble_select, EnsembleMargins, EnsembleState, Strategy};
pub use rl3::{rl3_fsm_step, rl3_rule_step, switcher, Phase, Rl3Fsm, Rl3Task, RuleController, RuleControllerParams, RulePolicy, RuleStep};
pub use task_action::{map_task_action, track_target, ActionWorkspace, TaskSpaceAction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("unknown transition condition {0}")]
    UnknownCondition(u8),
}
