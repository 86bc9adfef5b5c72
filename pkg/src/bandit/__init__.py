"""Exploration-exploitation over baseline types"""

from bandit.thompson import (ArmState, BanditState, Reward,          # noqa
                             SolverSettings, UpdateResult, init_state,
                             thompson_select, extract_reward, map_update,
                             precision_update)
from bandit.alternatives import (BetaCounts, alt_select,             # noqa
                                 beta_select, beta_update, uniform_select)
from bandit.samplers import (TypeSampler, ContextualSampler,         # noqa
                             BetaSampler, UniformSampler, FixedSampler)
from bandit.analysis import (WinRecord, win_rate_table,              # noqa
                             arm_score_distribution)
