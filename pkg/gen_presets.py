import os
import sys
import logging
from dotenv import load_dotenv
from lib.config import PRESETS, parse_config
from lib.errors import DiscordSimError
from lib.output_manager import OutputManager
from lib.scenario_manager import ScenarioManager
from lib.logger import setup_logger

load_dotenv()
setup_logger()

DISCORD_OUTPUT_DIR = os.getenv("DISCORD_OUTPUT_DIR", "output")
DISCORD_WORKERS = int(os.getenv("DISCORD_WORKERS", "1"))


def run_preset(name: str, output_dir: str, workers: int) -> str:
    config = parse_config("", {"preset": name, "mode": "figure-preset", "workers": workers})
    result = ScenarioManager(config).run_scenario()
    path = os.path.join(output_dir, f"{name}.csv")
    OutputManager("csv").write(result, path)
    return path


def main(names=None) -> int:
    logger = logging.getLogger(__name__)
    logger.info("Starting preset batch")

    names = names or sorted(PRESETS)
    failed = []
    try:
        for name in names:
            logger.info(f"Processing preset: {name}")
            try:
                path = run_preset(name, DISCORD_OUTPUT_DIR, DISCORD_WORKERS)
                logger.info(f"Preset {name} written to {path}")
            except DiscordSimError as e:
                logger.warning(f"Preset {name} failed: {e}")
                failed.append(name)

        if failed:
            logger.error(f"Preset batch finished with {len(failed)} failure(s): {', '.join(failed)}")
            return 2
        logger.info("Preset batch completed successfully")
        return 0

    except Exception as e:
        logger.error(f"Preset batch failed: {e}", exc_info=True)
        # Re-raise the exception to ensure proper exit code
        raise


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
