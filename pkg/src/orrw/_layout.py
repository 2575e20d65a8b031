"""Array layouts shared by the compiled and pure-Python kernels.

ORRW state vector ``st`` (int64), stop vector ``stop`` (int64) and the
status codes returned by ``orrw_run``.  Edge slots of one level: ``G``
horizontal slots (edge from (z, g) to (z + 1, g)) followed by ``EG``
vertical slots in fiber edge order.
"""

ST_LEVEL = 0
ST_FIBER = 1
ST_STEP = 2
ST_DRIFT = 3      # signed count of first crossings of horizontal edges
ST_VCOUNT = 4
ST_ECOUNT = 5
ST_MINLEV = 6
ST_MAXLEV = 7
ST_LO = 8         # level stored at window row 0
ST_NLEV = 9       # window rows
ST_NEVENTS = 10
ST_NPATH = 11
ST_SIZE = 12

SP_MAX_STEPS = 0
SP_LEVEL_HI = 1
SP_LEVEL_LO = 2
SP_VERTEX_LEVEL = 3
SP_VERTEX_FIBER = 4   # -1 disables
SP_NEW_EDGE = 5
SP_COMPLETE_LO = 6    # disabled when lo > hi
SP_COMPLETE_HI = 7
SP_VCOUNT = 8         # 0 disables
SP_USE_MASK = 9
SP_SIZE = 10

NO_HI = 2**62
NO_LO = -(2**62)

STOP_MAX = 0
STOP_HI = 1
STOP_LO = 2
STOP_VERTEX = 3
STOP_NEW_EDGE = 4
STOP_EXIT = 5
STOP_COMPLETE = 6
STOP_VCOUNT = 7
NEED_GROW = 10
EVENTS_FULL = 11
PATH_FULL = 12

STATUS_NAMES = {
    STOP_MAX: "max_steps",
    STOP_HI: "hit_level",
    STOP_LO: "hit_level_low",
    STOP_VERTEX: "hit_vertex",
    STOP_NEW_EDGE: "new_edge",
    STOP_EXIT: "exit_subgraph",
    STOP_COMPLETE: "level_complete",
    STOP_VCOUNT: "vertex_count",
}

EV_STEP, EV_TAIL_LEVEL, EV_TAIL_FIBER, EV_HEAD_LEVEL, EV_HEAD_FIBER = range(5)
EV_COLS = 5
PATH_COLS = 3  # level, fiber, new-edge flag

TWO53_INV = 1.0 / 9007199254740992.0
