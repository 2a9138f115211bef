import os

from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("POLYGAS_LOG_LEVEL", "INFO")
THREADS = int(os.getenv("POLYGAS_THREADS", "1"))
TOLERANCE = float(os.getenv("POLYGAS_TOLERANCE", "1e-7"))
SEED = int(os.getenv("POLYGAS_SEED", "7"))
MAX_TUPLES = int(float(os.getenv("POLYGAS_MAX_TUPLES", "5e6")))
MAX_MULTISETS = int(float(os.getenv("POLYGAS_MAX_MULTISETS", "2e6")))
QUADRATURE_ORDER = int(os.getenv("POLYGAS_QUADRATURE_ORDER", "24"))
OUTPUT_DIR = os.getenv("POLYGAS_OUTPUT_DIR", ".")

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"
