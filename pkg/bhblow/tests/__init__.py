from bhblow.tests.test_cli import *  # NOQA
from bhblow.tests.test_config import *  # NOQA
from bhblow.tests.test_evolve import *  # NOQA
from bhblow.tests.test_experiment import *  # NOQA
from bhblow.tests.test_grid import *  # NOQA
from bhblow.tests.test_hilbert import *  # NOQA
from bhblow.tests.test_initial import *  # NOQA
from bhblow.tests.test_profile import *  # NOQA
from bhblow.tests.test_selfsim import *  # NOQA
from bhblow.tests.test_util_fit import *  # NOQA
from bhblow.tests.test_util_snapshot import *  # NOQA
from bhblow.tests.test_util_table import *  # NOQA
from bhblow.tests.test_verify import *  # NOQA
