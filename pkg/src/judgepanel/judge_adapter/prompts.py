"""Audit prompt templates and builders."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from ..domain import ItemPair


class AuditKind(str, enum.Enum):
    PatternAudit = "PatternAudit"
    IssueAudit = "IssueAudit"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    audit_kind: AuditKind
    pair_id: str = ""


PATTERN_AUDIT_SYSTEM = """\
We propose the following CI patterns to determine if the recommended item is complementary to the anchor item.

1. ACCESSORY OR ADD-ON
– Definition: The recommended item augments or protects the anchor.
– Examples: A phone case or screen protector for a smartphone.

2. REPLENISHMENT OR CONSUMABLE
– Definition: The recommended item is used up alongside, or as a necessary refill for, the anchor.
– Examples: Ink cartridges for a printer.

3. FUNCTIONAL SYNERGY
– Definition: The recommended item and anchor combine to deliver a fuller or improved functionality.
– Examples: Camera lens or tripod for a DSLR camera.

4. AESTHETIC OR STYLE MATCH
– Definition: The recommended item complements the look or style of the anchor (often fashion- or décor-related).
– Examples: A matching scarf for a coat.

5. BUNDLED SOLUTION OR “COMPLETE THE SET”
– Definition: The recommended item helps complete a set or create a bundled offer.
– Examples: A bed frame to go with a matching headboard

6. BRAND SYNERGY
– Definition: Both the anchor and the recommended item come from the same brand or collection, ensuring consistent quality or compatibility.
– Examples: Matching laptop charger or accessory from the same manufacturer

7. OCCASION-/USE-CASE-BASED COMPLEMENT
– Definition: Items that pair well together for a specific event, activity, or purpose.
– Examples: Camping gear (tent + sleeping bag)

8. Other"""

PATTERN_AUDIT_USER = """\
You are an eCommerece specialist. Your expertise is to evaluate if the recommended item is complementary to the anchor or not.
If complementary, determine the CI patterns for the given a pair of products. Limit the answer to 15 words.
The item pairs are:
anchor item: {anchor_title}
recommended item: {recommended_title}"""

ISSUE_AUDIT_SYSTEM = """\
You are an e-commerce merchandising specialist responsible for auditing complementary product recommendations.
For each candidate recommendation, decide whether it is appropriate for the anchor product.
We have provide typical issues that can be used to evaluate the recommendation items:

1. Accessory / Refill for a Different Product
Definition: Designed for another model, device, or incompatible product.
Example: Recommending iPhone 14 case for an iPhone 12 anchor.

2. Embarrassing or Sensitive Content
Definition: May cause discomfort in a public shopping or gift-giving context.
Example: Recommending adult diapers alongside a children’s toy.

3. Product Category Too Distant
Definition: Minimal or no functional, thematic, or usage relationship.
Example: Recommending motor oil for a kitchen blender anchor.

4. Too Similar to Anchor
Definition: Substitute rather than a complement.
Example: Recommending Pepsi when the anchor is Coca-Cola (competing substitutes).

5. Wrong Age / Gender Targeting
Definition: Mismatch in intended demographic.
Example: Recommending toddler shoes for a men’s dress shirt.

6. Wrong Format
Definition: Different media/format type that doesn’t complement usage.
Example: Recommending an eBook when the anchor is a physical bookstand.

7. Wrong Size or Dimensions
Definition: Physically incompatible measurements or capacity.
Example: Recommending queen-size bed sheets for a twin bed.

8. Other
Definition: Any issue not covered above.
Example: Recommending a discontinued or unavailable item.

In the task of complementary recommendation, what other issues are not covered? If any,please update the issues list."""

ISSUE_AUDIT_USER = """\
You are a complementary product quality reviewer for an e-commerce catalog. Given an anchor product and
a candidate recommended product, decide whether the recommendation is appropriate as a complement and
flag any applicable issue codes. Limit the answer to 15 words.
The item pairs are:
anchor_item:
title: {anchor_title},
product_type: {anchor_product_type},
product_category: {anchor_product_category}
recommended_item:
title: {recommended_title},
product_type: {recommended_product_type},
product_category: {recommended_product_category}"""

REPORT_SYSTEM_PREAMBLE = (
    "You are an analytics assistant tasked with generating a report based on the "
    "following JSON configuration:"
)
REPORT_USER = "Please analyze the data and generate a structured report based on the provided configuration."

PLACEHOLDER_RE = re.compile(r"\{[a-z_]+\}")
MISSING = "unknown"


def _fill(template: str, values: dict[str, str]) -> str:
    # Single regex pass: substituted text is never rescanned, so braces in
    # titles survive literally.
    return PLACEHOLDER_RE.sub(lambda m: values[m.group(0)[1:-1]], template)


def _or_unknown(value: Optional[str]) -> str:
    return value if value and value.strip() else MISSING


def build_pattern_audit_prompt(pair: ItemPair) -> PromptBundle:
    user = _fill(
        PATTERN_AUDIT_USER,
        {"anchor_title": pair.anchor.title, "recommended_title": pair.recommended.title},
    )
    return PromptBundle(PATTERN_AUDIT_SYSTEM, user, AuditKind.PatternAudit, pair.pair_id)


def build_issue_audit_prompt(pair: ItemPair) -> PromptBundle:
    a, r = pair.anchor, pair.recommended
    user = _fill(
        ISSUE_AUDIT_USER,
        {
            "anchor_title": a.title,
            "anchor_product_type": _or_unknown(a.product_type),
            "anchor_product_category": _or_unknown(a.product_category),
            "recommended_title": r.title,
            "recommended_product_type": _or_unknown(r.product_type),
            "recommended_product_category": _or_unknown(r.product_category),
        },
    )
    return PromptBundle(ISSUE_AUDIT_SYSTEM, user, AuditKind.IssueAudit, pair.pair_id)


def build_prompt(pair: ItemPair, kind: AuditKind) -> PromptBundle:
    if kind is AuditKind.PatternAudit:
        return build_pattern_audit_prompt(pair)
    return build_issue_audit_prompt(pair)


def template_fields(kind: AuditKind) -> set[str]:
    template = PATTERN_AUDIT_USER if kind is AuditKind.PatternAudit else ISSUE_AUDIT_USER
    return set(PLACEHOLDER_RE.findall(template))


def build_report_prompt(rules, data_pairs: Iterable[dict]) -> tuple[str, str]:
    """System/user text for the optional LLM prose pass over audited pairs."""
    config = {
        "action": "generate_report",
        "normalization_rules": rules.to_config(),
        "report_requirements": {
            "compute_agreement": True,
            "compute_issue_frequency": True,
            "identify_conflicted_pairs": True,
            "suggest_new_issue_codes": True,
        },
        "data_pairs": list(data_pairs),
    }
    system = REPORT_SYSTEM_PREAMBLE + "\n\n" + json.dumps(config, indent=4, ensure_ascii=False)
    return system, REPORT_USER
