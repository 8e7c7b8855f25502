import os
import json
import logging
from typing import Any, Dict, Optional, Sequence

import allure
from allure_commons.types import AttachmentType

from core.config.env_loader import get_reporting_config

logger = logging.getLogger(__name__)


class AllureReporter:
    """
    A utility class for attaching run artifacts (curves, manifests, parameters) to Allure.
    """

    def __init__(self):
        """
        Initialize the AllureReporter with the reporting configuration.
        """
        self.report_config = get_reporting_config().get('allure', {})
        self.enabled = self.report_config.get('enabled', True)

        if not self.enabled:
            logger.info("Allure reporting is disabled")

    def add_step(self, name: str, details: Optional[str] = None) -> None:
        """
        Add a step to the current test.

        Args:
            name: Name of the step
            details: Optional details of the step
        """
        if not self.enabled:
            return

        with allure.step(name):
            if details:
                allure.attach(body=details, name="Step Details", attachment_type=AttachmentType.TEXT)

    def add_parameters(self, parameters: Dict[str, Any]) -> None:
        """
        Record run parameters (seeds, grids, constants) on the current test.

        Args:
            parameters: Parameter names and values
        """
        if not self.enabled:
            return

        for name, value in parameters.items():
            allure.dynamic.parameter(name, value)

    def add_json(self, name: str, data: Any) -> None:
        if not self.enabled:
            return

        allure.attach(body=json.dumps(data, indent=2, sort_keys=True, default=str), name=name,
                      attachment_type=AttachmentType.JSON)

    def add_table(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
        """
        Attach rows as CSV text.

        Args:
            name: Attachment name
            header: Column names
            rows: Row values
        """
        if not self.enabled:
            return

        lines = [",".join(header)] + [",".join(format(v, ".6g") if isinstance(v, float) else str(v) for v in row)
                                      for row in rows]
        allure.attach(body="\n".join(lines), name=name, attachment_type=AttachmentType.CSV)

    def add_file(self, path: str, name: Optional[str] = None) -> None:
        """
        Attach an artifact file written by a run; CSV and JSON files keep their type.

        Args:
            path: File path
            name: Attachment name (default: the file name)
        """
        if not self.enabled:
            return

        if not os.path.exists(path):
            logger.warning(f"Artifact not found, not attached: {path}")
            return
        attachment_type = {
            ".csv": AttachmentType.CSV,
            ".json": AttachmentType.JSON,
        }.get(os.path.splitext(path)[1], AttachmentType.TEXT)
        allure.attach.file(path, name=name or os.path.basename(path), attachment_type=attachment_type)

    def add_feature(self, feature: str) -> None:
        if not self.enabled:
            return

        allure.dynamic.feature(feature)

    def add_story(self, story: str) -> None:
        if not self.enabled:
            return

        allure.dynamic.story(story)


# Singleton instance for global use
allure_reporter = AllureReporter()
