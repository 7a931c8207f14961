"""Closed vocabulary shared by every stage: items, taxonomies, severity ladder."""

from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, NamedTuple, Optional

PAIR_ID_SEPARATOR = "\x1f"


def _squash(text: str) -> str:
    """Lowercase and collapse every run of non-alphanumerics to one space."""
    return re.sub(r"[^0-9a-z]+", " ", text.lower()).strip()


class Category(str, enum.Enum):
    Electronics = "Electronics"
    SportsOutdoors = "SportsOutdoors"
    PetSupplies = "PetSupplies"
    HomeGarden = "HomeGarden"
    ToysGames = "ToysGames"
    FoodBeverages = "FoodBeverages"
    ClothingShoes = "ClothingShoes"
    Other = "Other"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, raw: str) -> "Category":
        """Accept canonical names and common display forms ("Sports & Outdoors")."""
        key = _squash(raw).replace(" ", "")
        for member in cls:
            if member.value.lower() == key:
                return member
        return _CATEGORY_ALIASES.get(key, cls.Other)


_CATEGORY_ALIASES = {
    "electronic": Category.Electronics,
    "sports": Category.SportsOutdoors,
    "sport": Category.SportsOutdoors,
    "sportsandoutdoors": Category.SportsOutdoors,
    "sportandoutdoors": Category.SportsOutdoors,
    "pets": Category.PetSupplies,
    "pet": Category.PetSupplies,
    "homeandgarden": Category.HomeGarden,
    "home": Category.HomeGarden,
    "toys": Category.ToysGames,
    "toysandgames": Category.ToysGames,
    "food": Category.FoodBeverages,
    "foodandbeverages": Category.FoodBeverages,
    "clothing": Category.ClothingShoes,
    "clothes": Category.ClothingShoes,
    "clothingandshoes": Category.ClothingShoes,
    "clothesandshoes": Category.ClothingShoes,
}


class CIPattern(str, enum.Enum):
    AccessoryAddOn = "AccessoryAddOn"
    Replenishment = "Replenishment"
    FunctionalSynergy = "FunctionalSynergy"
    AestheticMatch = "AestheticMatch"
    BundledSet = "BundledSet"
    BrandSynergy = "BrandSynergy"
    OccasionUseCase = "OccasionUseCase"
    Other = "Other"

    def __str__(self) -> str:
        return self.value

    @property
    def number(self) -> int:
        return _PATTERN_ORDER.index(self) + 1

    @property
    def heading(self) -> str:
        return PATTERN_HEADINGS[self]


_PATTERN_ORDER = list(CIPattern)

# Rubric headings as they appear in the pattern-audit system prompt.
PATTERN_HEADINGS: dict[CIPattern, str] = {
    CIPattern.AccessoryAddOn: "ACCESSORY OR ADD-ON",
    CIPattern.Replenishment: "REPLENISHMENT OR CONSUMABLE",
    CIPattern.FunctionalSynergy: "FUNCTIONAL SYNERGY",
    CIPattern.AestheticMatch: "AESTHETIC OR STYLE MATCH",
    CIPattern.BundledSet: "BUNDLED SOLUTION OR “COMPLETE THE SET”",
    CIPattern.BrandSynergy: "BRAND SYNERGY",
    CIPattern.OccasionUseCase: "OCCASION-/USE-CASE-BASED COMPLEMENT",
    CIPattern.Other: "Other",
}

# Fragments a judge is likely to echo back. "Other" is deliberately absent:
# free-text "other" is too common to count as a pattern citation.
_PATTERN_FRAGMENTS: dict[CIPattern, tuple[str, ...]] = {
    CIPattern.AccessoryAddOn: ("accessory or add on", "accessory", "add on"),
    CIPattern.Replenishment: ("replenishment or consumable", "replenishment", "consumable", "refill"),
    CIPattern.FunctionalSynergy: ("functional synergy",),
    CIPattern.AestheticMatch: ("aesthetic or style match", "aesthetic", "style match"),
    CIPattern.BundledSet: ("bundled solution or complete the set", "bundled solution", "complete the set", "bundle"),
    CIPattern.BrandSynergy: ("brand synergy",),
    CIPattern.OccasionUseCase: ("occasion use case based complement", "occasion", "use case"),
}


def match_patterns(raw: str) -> set[CIPattern]:
    """Every pattern whose heading fragment occurs (word-bounded) in ``raw``."""
    text = f" {_squash(raw)} "
    return {
        pattern
        for pattern, fragments in _PATTERN_FRAGMENTS.items()
        if any(f" {frag} " in text for frag in fragments)
    }


def parse_pattern(raw: str) -> CIPattern:
    """Map a heading number, canonical name or heading text to a pattern.

    Unmatched input falls through to ``CIPattern.Other``. When several
    headings match, the lowest-numbered one wins.
    """
    stripped = raw.strip()
    number = re.match(r"^(\d+)\s*[.)]?", stripped)
    if number and 1 <= int(number.group(1)) <= len(_PATTERN_ORDER):
        return _PATTERN_ORDER[int(number.group(1)) - 1]
    for member in CIPattern:
        if stripped == member.value:
            return member
    hits = match_patterns(stripped)
    if not hits:
        return CIPattern.Other
    return min(hits, key=lambda p: p.number)


class IssueCode(str, enum.Enum):
    ACC_DIFF = "ACC-DIFF"
    SENS = "SENS"
    CAT_DIST = "CAT-DIST"
    SUBST = "SUBST"
    WRONG_AGE_GEN = "WRONG-AGE-GEN"
    WRONG_FORMAT = "WRONG-FORMAT"
    WRONG_SIZE_DIM = "WRONG-SIZE-DIM"
    OTHER = "OTHER"
    COMPAT = "COMPAT"
    FUNC_MIS = "FUNC-MIS"
    CTX_MIS = "CTX-MIS"

    def __str__(self) -> str:
        return self.value

    @property
    def extended(self) -> bool:
        return self in EXTENDED_ISSUE_CODES

    @property
    def label(self) -> str:
        """Human-readable name used in report tables."""
        return ISSUE_LABELS[self]


BASE_ISSUE_CODES = tuple(list(IssueCode)[:8])
EXTENDED_ISSUE_CODES = tuple(list(IssueCode)[8:])

# Long forms from the normalization config shipped with the report prompt.
ISSUE_HINTS: dict[IssueCode, str] = {
    IssueCode.ACC_DIFF: "Accessory / Refill for Wrong Product",
    IssueCode.SENS: "Sensitive / Embarrassing Content",
    IssueCode.CAT_DIST: "Category Too Distant",
    IssueCode.SUBST: "Too Similar / Substitute",
    IssueCode.WRONG_AGE_GEN: "Wrong Age / Gender Targeting",
    IssueCode.WRONG_FORMAT: "Format Mismatch",
    IssueCode.WRONG_SIZE_DIM: "Size / Dimension Mismatch",
    IssueCode.OTHER: "Other Issue",
    IssueCode.COMPAT: "Compatibility Issue",
    IssueCode.FUNC_MIS: "Functional Mismatch",
    IssueCode.CTX_MIS: "Contextual Suitability Issue",
}

ISSUE_LABELS: dict[IssueCode, str] = {
    IssueCode.ACC_DIFF: "Accessory / Refill for a Different Product",
    IssueCode.SENS: "Embarrassing or Sensitive Content",
    IssueCode.CAT_DIST: "Product Category Too Distant",
    IssueCode.SUBST: "Too Similar to Anchor",
    IssueCode.WRONG_AGE_GEN: "Wrong Age / Gender Targeting",
    IssueCode.WRONG_FORMAT: "Wrong Format",
    IssueCode.WRONG_SIZE_DIM: "Wrong Size or Dimensions",
    IssueCode.OTHER: "Other",
    IssueCode.COMPAT: "Compatibility Issue",
    IssueCode.FUNC_MIS: "Functional Mismatch",
    IssueCode.CTX_MIS: "Contextual Suitability Issue",
}

EXTENDED_ISSUE_DESCRIPTIONS: dict[IssueCode, str] = {
    IssueCode.COMPAT: "paired items look related but do not work together in practice",
    IssueCode.FUNC_MIS: "items serve different intended applications",
    IssueCode.CTX_MIS: "items suit different contexts, seasons or usage settings",
}


def _issue_key(text: str) -> str:
    return _squash(text.replace("_", " ").replace("-", " "))


_ISSUE_LOOKUP: dict[str, IssueCode] = {}
for _code in IssueCode:
    _ISSUE_LOOKUP[_issue_key(_code.value)] = _code
    _ISSUE_LOOKUP[_issue_key(_code.name)] = _code
    _ISSUE_LOOKUP.setdefault(_issue_key(ISSUE_HINTS[_code]), _code)
    _ISSUE_LOOKUP.setdefault(_issue_key(ISSUE_LABELS[_code]), _code)
_ISSUE_LOOKUP[_issue_key("Accessory / Refill for Different Product")] = IssueCode.ACC_DIFF
_ISSUE_LOOKUP[_issue_key("Substitute")] = IssueCode.SUBST

# Phrases searched inside free text; bare "other" is excluded for the same
# reason as in the pattern fragments.
_ISSUE_SCAN = sorted(
    ((key, code) for key, code in _ISSUE_LOOKUP.items() if key not in ("other", "substitute")),
    key=lambda kv: -len(kv[0]),
)


class ParsedIssue(NamedTuple):
    code: IssueCode
    annotation: Optional[str] = None


def parse_issue_code(raw: str) -> ParsedIssue:
    """Resolve a code or long-form hint; anything else becomes OTHER.

    Matching ignores case and treats hyphens, underscores and whitespace
    alike. The original text survives as ``annotation`` when it falls
    through to OTHER.
    """
    code = _ISSUE_LOOKUP.get(_issue_key(raw))
    if code is None:
        return ParsedIssue(IssueCode.OTHER, raw.strip())
    return ParsedIssue(code)


def find_issue_codes(text: str) -> set[IssueCode]:
    """Codes or long forms mentioned anywhere in ``text`` (word-bounded)."""
    haystack = f" {_issue_key(text)} "
    found: set[IssueCode] = set()
    for key, code in _ISSUE_SCAN:
        if f" {key} " in haystack:
            found.add(code)
    return found


class Severity(enum.IntEnum):
    Good = 0
    Minor = 1
    Major = 2
    Reject = 3

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, raw: str) -> "Severity":
        return cls[raw.strip().capitalize()]


def stricter(a: Severity, b: Severity) -> Severity:
    return a if a >= b else b


def stricter_fold(severities: Iterable[Severity]) -> Severity:
    """Strictest severity of a non-empty collection."""
    return reduce(stricter, severities)


class Determination(str, enum.Enum):
    Good = "Good"
    Bad = "Bad"
    Unknown = "Unknown"
    Conflict = "Conflict"

    def __str__(self) -> str:
        return self.value


DEFAULT_PROJECTION: Mapping[Severity, Determination] = {
    Severity.Good: Determination.Good,
    Severity.Minor: Determination.Good,
    Severity.Major: Determination.Bad,
    Severity.Reject: Determination.Bad,
}


def project(severity: Severity, projection: Mapping[Severity, Determination] = DEFAULT_PROJECTION) -> Determination:
    return projection[severity]


@dataclass(frozen=True)
class Item:
    title: str
    product_type: Optional[str] = None
    product_category: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.title, str) or not self.title.strip():
            raise ValueError("item title must be non-empty")

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "product_type": self.product_type,
            "product_category": self.product_category,
        }


def make_pair_id(anchor_title: str, recommended_title: str) -> str:
    payload = f"{anchor_title}{PAIR_ID_SEPARATOR}{recommended_title}".encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class ItemPair:
    anchor: Item
    recommended: Item
    category: Category = Category.Other
    pair_id: str = field(default="")

    def __post_init__(self) -> None:
        expected = make_pair_id(self.anchor.title, self.recommended.title)
        if not self.pair_id:
            object.__setattr__(self, "pair_id", expected)
        elif self.pair_id != expected:
            raise ValueError(f"pair_id {self.pair_id!r} does not match item titles")

    @classmethod
    def of(cls, anchor: str, recommended: str, category: Category | str = Category.Other) -> "ItemPair":
        if isinstance(category, str) and not isinstance(category, Category):
            category = Category.parse(category)
        return cls(Item(anchor), Item(recommended), category)

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "anchor": self.anchor.to_dict(),
            "recommended": self.recommended.to_dict(),
            "category": self.category.value,
        }


def format_temperature(temperature: float) -> str:
    return f"{temperature:g}"


@dataclass(frozen=True, order=True)
class JudgeIdentity:
    provider: str
    model: str
    temperature: float

    def __post_init__(self) -> None:
        if not self.provider or "_" in self.provider:
            raise ValueError(f"provider must be non-empty and underscore-free: {self.provider!r}")
        if not self.model:
            raise ValueError("model must be non-empty")
        if not 0 < self.temperature <= 2:
            raise ValueError(f"temperature out of range (0, 2]: {self.temperature}")

    @property
    def judge_key(self) -> str:
        return f"{self.provider}_{self.model}_temp_{format_temperature(self.temperature)}"

    @property
    def model_key(self) -> str:
        return f"{self.provider}_{self.model}"

    def __str__(self) -> str:
        return self.judge_key

    @classmethod
    def parse(cls, judge_key: str) -> "JudgeIdentity":
        head, sep, temp = judge_key.rpartition("_temp_")
        provider, sep2, model = head.partition("_")
        if not sep or not sep2:
            raise ValueError(f"malformed judge key: {judge_key!r}")
        return cls(provider, model, float(temp))
