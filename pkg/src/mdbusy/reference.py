"""Published reference tables for the M/D/inf busy period and busy cycle.

Values are transcribed as printed.  Cells that contradict their own
defining formula or the monotonicity of a CDF are listed in
``known_misprints`` (column name per row) and carry a reason; they are
reported but never used to gate a comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ReferenceRow:
    t: float
    cdf: float
    bound_chebyshev: float | None = None
    bound_atom: float | None = None
    exact_exponential: float | None = None
    known_misprints: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ReferenceTable:
    table_id: str
    kind: str
    a: float
    lam: float
    delta_t: float
    delta_p: float
    rows: tuple[ReferenceRow, ...]
    exact: dict[str, float] = field(default_factory=dict)
    recovered: dict[str, float] = field(default_factory=dict)
    summary_misprints: dict[str, str] = field(default_factory=dict)

    @property
    def ts(self) -> list[float]:
        return [r.t for r in self.rows]


def _busy(rows, misprints=None):
    misprints = misprints or {}
    return tuple(
        ReferenceRow(t=t, cdf=c, bound_chebyshev=b1, bound_atom=b2, known_misprints=misprints.get(t, {}))
        for t, b1, b2, c in rows
    )


def _cycle(rows, misprints=None):
    misprints = misprints or {}
    return tuple(ReferenceRow(t=t, cdf=c, known_misprints=misprints.get(t, {})) for t, c in rows)


_TABLE_3_2_B1 = "whole column disagrees with the Chebyshev formula (e.g. t=5 gives 0.9116)"

TABLES: dict[str, ReferenceTable] = {}

TABLES["3.1"] = ReferenceTable(
    "3.1", "busy-period", a=0.1, lam=1.0, delta_t=0.001, delta_p=0.001,
    rows=_busy(
        [
            (0.1, -12.784463, 0.904837, 0.453519),
            (0.11, -14.805955, 0.904837, 0.91431),
            (0.15, 0.316597, 0.904837, 0.950782),
            (0.2, 0.959013, 0.904837, 0.996209),
            (0.25, 0.982428, 0.904837, 0.999575),
        ],
        {0.15: {"bound_chebyshev": "formula gives 0.8166 at t=0.15; other rows match it"}},
    ),
    exact={"mean": 0.105170918, "variance": 0.0003685744},
    recovered={"mean": 0.1049714128, "variance": 0.00031661238},
)

TABLES["3.2"] = ReferenceTable(
    "3.2", "busy-period", a=1.0, lam=1.0, delta_t=0.1, delta_p=0.001,
    rows=_busy(
        [
            (1.0, -21.921031, 0.367879, 0.190999),
            (2.0, -148.002717, 0.367879, 0.741497),
            (3.0, -6.198447, 0.367879, 0.907228),
            (4.0, -1.271433, 0.367879, 0.969885),
            (5.0, -0.098048, 0.367879, 0.992784),
        ],
        {t: {"bound_chebyshev": _TABLE_3_2_B1} for t in (1.0, 2.0, 3.0, 4.0, 5.0)},
    ),
    exact={"mean": 1.718281828, "variance": 0.9524924414},
    recovered={"mean": 1.6649785, "variance": 0.70343785},
)

TABLES["3.3"] = ReferenceTable(
    "3.3", "busy-period", a=3.0, lam=1.0, delta_t=0.5, delta_p=0.01,
    rows=_busy(
        [
            (3.0, -0.0895519, 0.0497871, 0.025126),
            (4.0, -0.238790, 0.0497871, 0.099527),
            (5.0, -0.420929, 0.0497871, 0.148885),
            (6.0, -0.646402, 0.0497871, 0.198405),
            (7.0, 0.930133, 0.0497871, 0.244893),
            (8.0, -1.294064, 0.0497871, 0.288204),
            (9.0, -1.771539, 0.0497871, 0.329391),
            (10.0, -2.415214, 0.0497871, 0.368208),
            (15.0, -15.889655, 0.0497871, 0.530699),
            (20.0, -336.121704, 0.0497871, 0.65134),
            (25.0, -7.0691347, 0.0497871, 0.740937),
            (30.0, -1.366543, 0.0497871, 0.807469),
            (35.0, -0.113102, 0.0497871, 0.856896),
            (40.0, 0.355496, 0.0497871, 0.893608),
            (45.0, 0.580208, 0.0497871, 0.920880),
            (50.0, 0.705018, 0.0497871, 0.941125),
            (55.0, 0.781435, 0.0497871, 0.956144),
            (60.0, 0.831591, 0.0497871, 0.967298),
            (70.0, 0.891248, 0.0497871, 0.981726),
            (75.0, 0.909828, 0.0497871, 0.986298),
            (80.0, 0.924024, 0.0497871, 0.989706),
            (85.0, 0.935113, 0.0497871, 0.992233),
        ],
        {
            7.0: {"bound_chebyshev": "sign dropped: formula gives -0.930133"},
            25.0: {"bound_chebyshev": "one digit off: formula gives -7.0591347"},
        },
    ),
    exact={"mean": 19.08553692, "variance": 281.9155718},
    recovered={"mean": 18.60845683, "variance": 250.9405890},
)

TABLES["4.1"] = ReferenceTable(
    "4.1", "busy-cycle", a=0.0, lam=1.0, delta_t=0.01, delta_p=0.001,
    rows=tuple(
        ReferenceRow(
            t=t,
            cdf=c,
            exact_exponential=e,
            known_misprints=(
                {"exact_exponential": "digits garbled after the fifth decimal: 1 - e^-3 = 0.950212931632"}
                if t == 3.0
                else {}
            ),
        )
        for t, c, e in [
            (0.0, 0.00020928263, 0.0),
            (0.5, 0.39354845, 0.39346934),
            (1.0, 0.63201874, 0.632120559),
            (1.5, 0.77676630, 0.77686984),
            (2.0, 0.86456292, 0.864664717),
            (2.5, 0.91781115, 0.917915001),
            (3.0, 0.95011103, 0.95021212932),
            (3.5, 0.96969878, 0.969802617),
        ]
    ),
)

TABLES["4.2"] = ReferenceTable(
    "4.2", "busy-cycle", a=1.0, lam=1.0, delta_t=0.01, delta_p=0.001,
    rows=_cycle(
        [
            (0.5, 0.00070788896), (1.0, 0.00078194999), (1.5, 0.18467983),
            (2.0, 0.36851909), (2.5, 0.53561949), (3.0, 0.66881525),
            (3.5, 0.76919734), (4.0, 0.84198290), (4.5, 0.89332950),
            (5.0, 0.92884773), (5.5, 0.95303684), (6.0, 0.96932029),
            (6.5, 0.98016983), (7.0, 0.98734205), (7.5, 0.99205017),
        ]
    ),
    exact={"mean": 2.718281829, "variance": 1.9444392442},
    recovered={"mean": 2.605018789, "variance": 1.875647136},
    summary_misprints={"variance": "e^2 - 2e = 1.952492 for lam=1, rho=1"},
)

TABLES["4.3"] = ReferenceTable(
    "4.3", "busy-cycle", a=1.0, lam=2.0, delta_t=0.01, delta_p=0.001,
    rows=_cycle(
        [
            (0.5, 0.00038790601), (1.0, 0.00045109048), (1.5, 0.13572108),
            (2.0, 0.27099844), (2.5, 0.39718168), (3.0, 0.50513958),
            (3.5, 0.59509700), (4.0, 0.66922503), (4.5, 0.72997826),
            (5.0, 0.77964925), (5.5, 0.82022225), (6.0, 0.85335999),
            (6.5, 0.88039940), (7.0, 0.92047130), (7.5, 0.92047894),
            (8.0, 0.93518191), (8.5, 0.94718128), (9.0, 0.95697385),
            (9.5, 0.96496373), (10.0, 0.97148519), (10.5, 0.97680729),
            (11.0, 0.98115152), (11.5, 0.96469930), (12.0, 0.98759257),
            (12.5, 0.98995178), (13.0, 0.99188309), (13.5, 0.99344980),
            (14.0, 0.99473917),
        ],
        {
            7.0: {"cdf": "equals the t=7.5 value to 5 digits; breaks the smooth increments of its neighbours"},
            11.5: {"cdf": "smaller than the t=11 value; a CDF cannot decrease"},
        },
    ),
    exact={"mean": 3.69452805, "variance": 6.260481408},
    recovered={"mean": 3.606224458, "variance": 5.358674148},
)

TABLES["4.4"] = ReferenceTable(
    "4.4", "busy-cycle", a=2.0, lam=1.0, delta_t=0.01, delta_p=0.001,
    rows=_cycle(
        [
            (0.5, 0.00039526703), (1.0, 0.00039531649), (1.5, 0.00039744257),
            (2.0, 0.00042999497), (2.5, 0.0068082088), (3.0, 0.13566480),
            (3.5, 0.20333376), (4.0, 0.27105104), (4.5, 0.33643096),
            (5.0, 0.39722785), (5.5, 0.45344632), (6.0, 0.50523263),
            (6.5, 0.55233818), (7.0, 0.59518069), (7.5, 0.63407224),
            (8.0, 0.66930794), (8.5, 0.70120662), (9.0, 0.73005634),
            (9.5, 0.75615197), (10.0, 0.77973318), (10.5, 0.80105113),
            (11.0, 0.82031202), (11.5, 0.83771467), (12.0, 0.85343867),
            (12.5, 0.86764937), (13.0, 0.88047999), (13.5, 0.89207541),
            (14.0, 0.90255320), (14.5, 0.91201680), (15.0, 0.92056465),
            (15.5, 0.92828899), (16.0, 0.93526571), (16.5, 0.94157290),
            (17.0, 0.94726365), (17.5, 0.95241045), (18.0, 0.95705801),
            (18.5, 0.96125179), (19.0, 0.96504825), (19.5, 0.96847575),
            (20.0, 0.97157025), (20.5, 0.97437018), (21.0, 0.97689431),
            (21.5, 0.97917509), (22.0, 0.98124003), (22.5, 0.98309797),
            (23.0, 0.98477888), (23.5, 0.98630297), (24.0, 0.98767584),
            (24.5, 0.98891764), (25.0, 0.99003869), (25.5, 0.99104917),
            (26.0, 0.99196279), (26.5, 0.99279278), (27.0, 0.99353820),
        ],
        {2.5: {"cdf": "decimal point shifted: about 0.068 fits the neighbouring rows"}},
    ),
    exact={"mean": 7.389056099, "variance": 25.04192563},
    recovered={"mean": 7.200722486, "variance": 20.69584719},
)

TABLE_IDS = tuple(TABLES)
