"""Rate-region lab and block-Markov simulator for multiple-access relay channels
with correlated sources and side information."""

__version__ = "0.1.0"

from .prob import (  # noqa: E402
    CommonPart,
    ConditionalPmf,
    JointPmf,
    TypicalityQuery,
    Variable,
    entropy,
    gacs_korner_common_part,
    is_markov_chain,
    marginalize,
    mutual_information,
    sample,
    strongly_typical,
    validate_factorization,
)
from .models import (  # noqa: E402
    CpmInputA,
    CpmInputB,
    DmChannel,
    SeparationInput,
    SourceSideInfoModel,
    crbc_input,
    somarc_channel,
    somarc_source,
)
from .conditions import (  # noqa: E402
    ConditionReport,
    check_crbc,
    check_outer_thm2,
    check_outer_thm3_relay,
    check_thm1,
    check_thm6_cpm,
    check_thm7_cpm,
    separation_operating_margins,
)
from .search import SearchConfig, maximize_mi  # noqa: E402
